#include "boxflow/active_set.hpp"

#include <algorithm>
#include <sstream>

#include "boxflow/errors.hpp"

namespace boxflow {

namespace {

void check_sorted_unique(const std::vector<Index>& idx, Index n, const char* side) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= n) {
            std::ostringstream os;
            os << "ActiveBoundSet: " << side << " index " << idx[k] << " out of range";
            throw ArgumentError(os.str());
        }
        if (k > 0 && idx[k] <= idx[k - 1])
            throw ArgumentError(std::string("ActiveBoundSet: ") + side +
                                " indices must be strictly ascending");
    }
}

} // namespace

bool ActiveBoundSet::has_lower(Index i) const {
    return std::binary_search(lower.begin(), lower.end(), i);
}

bool ActiveBoundSet::has_upper(Index i) const {
    return std::binary_search(upper.begin(), upper.end(), i);
}

void ActiveBoundSet::validate(Index n) const {
    check_sorted_unique(lower, n, "lower");
    check_sorted_unique(upper, n, "upper");
    for (Index i : lower)
        if (has_upper(i)) {
            std::ostringstream os;
            os << "ActiveBoundSet: component " << i << " is active at both bounds";
            throw ArgumentError(os.str());
        }
}

SelectionMatrixView::SelectionMatrixView(std::vector<SelectionRow> rows, Index n)
    : rows_(std::move(rows)), n_(n) {
    if (n_ <= 0)
        throw ArgumentError("SelectionMatrixView: dimension must be positive");
    std::vector<char> seen(static_cast<std::size_t>(n_), 0);
    for (const auto& r : rows_) {
        if (r.index < 0 || r.index >= n_)
            throw ArgumentError("SelectionMatrixView: row index out of range");
        if (r.sign != 1 && r.sign != -1)
            throw ArgumentError("SelectionMatrixView: row sign must be +1 or -1");
        auto& s = seen[static_cast<std::size_t>(r.index)];
        if (s)
            throw ArgumentError("SelectionMatrixView: duplicate or conflicting row for component " +
                                std::to_string(r.index));
        s = 1;
    }
}

SelectionMatrixView SelectionMatrixView::from(const ActiveBoundSet& set, Index n) {
    set.validate(n);
    std::vector<SelectionRow> rows;
    rows.reserve(set.size());
    for (Index i : set.upper)
        rows.push_back({i, 1});
    for (Index i : set.lower)
        rows.push_back({i, -1});
    return SelectionMatrixView(std::move(rows), n);
}

Mat SelectionMatrixView::matrix() const {
    Mat h = Mat::Zero(rows(), n_);
    for (Index r = 0; r < rows(); ++r)
        h(r, rows_[static_cast<std::size_t>(r)].index) = rows_[static_cast<std::size_t>(r)].sign;
    return h;
}

Mat SelectionMatrixView::pseudo_inverse() const { return matrix().transpose(); }

Vec SelectionMatrixView::project_out(const Vec& v) const {
    if (v.size() != n_)
        throw ArgumentError("SelectionMatrixView::project_out: dimension mismatch");
    Vec out = v;
    for (const auto& r : rows_)
        out[r.index] = 0.0;
    return out;
}

} // namespace boxflow
