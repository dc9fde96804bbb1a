#pragma once

#include <vector>

#include "boxflow/core.hpp"

namespace boxflow {

/// Indices (0-based, ascending) of components sitting on their lower and
/// upper bounds. Used for the activated set at a point, the working and
/// optimal-active sets of the feedback QP, and the active set at a solution.
struct ActiveBoundSet {
    std::vector<Index> lower;
    std::vector<Index> upper;

    bool empty() const { return lower.empty() && upper.empty(); }
    std::size_t size() const { return lower.size() + upper.size(); }
    bool has_lower(Index i) const;
    bool has_upper(Index i) const;

    /// Sorted, in range [0, n), no duplicates, lower and upper disjoint.
    void validate(Index n) const;

    friend bool operator==(const ActiveBoundSet&, const ActiveBoundSet&) = default;
};

/// One row of the active-constraint Jacobian: +e_i for an upper bound,
/// -e_i for a lower bound.
struct SelectionRow {
    Index index = 0;
    int sign = 1;

    friend bool operator==(const SelectionRow&, const SelectionRow&) = default;
};

/// Jacobian of a set of active bound constraints. Every row holds a single
/// +-1, so for a valid (full row rank) set h h^T = I and pinv(h) = h^T, and
/// pinv(h) h is the 0/1 diagonal marking the selected components.
class SelectionMatrixView {
public:
    /// Rejects duplicate rows and components selected with both signs.
    SelectionMatrixView(std::vector<SelectionRow> rows, Index n);

    /// Upper-bound rows first, then lower-bound rows, each ascending.
    static SelectionMatrixView from(const ActiveBoundSet& set, Index n);

    Index rows() const { return static_cast<Index>(rows_.size()); }
    Index cols() const { return n_; }
    const std::vector<SelectionRow>& entries() const { return rows_; }

    Mat matrix() const;
    Mat pseudo_inverse() const;

    /// (I - pinv(h) h) v: zeroes the selected components.
    Vec project_out(const Vec& v) const;

private:
    std::vector<SelectionRow> rows_;
    Index n_ = 0;
};

} // namespace boxflow
