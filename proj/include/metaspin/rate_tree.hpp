// Complete binary tree over per-vertex rates: O(log n) weighted sampling and
// O(log n) single-rate updates, with the exact total maintained at the root.
#pragma once

#include <cstddef>
#include <vector>

namespace metaspin {

class RateTree {
  public:
    RateTree() = default;

    explicit RateTree(int n) { reset(n); }

    void reset(int n) {
        n_ = n;
        cap_ = 1;
        while (cap_ < n) cap_ <<= 1;
        tree_.assign(2 * cap_, 0.0);
    }

    int size() const { return n_; }
    double total() const { return tree_[1]; }
    double rate(int i) const { return tree_[cap_ + i]; }

    void set(int i, double w) {
        std::size_t pos = cap_ + i;
        tree_[pos] = w;
        for (pos >>= 1; pos >= 1; pos >>= 1) tree_[pos] = tree_[2 * pos] + tree_[2 * pos + 1];
    }

    // Index i with cumulative weight containing u * total(), u in [0,1).
    // Descends left-first; never returns an index with zero rate unless the
    // tree is entirely zero.
    int sample(double u) const {
        double target = u * tree_[1];
        std::size_t pos = 1;
        while (pos < cap_) {
            double left = tree_[2 * pos];
            if (target < left) {
                pos = 2 * pos;
            } else {
                target -= left;
                pos = 2 * pos + 1;
            }
        }
        int i = static_cast<int>(pos - cap_);
        return i < n_ ? i : n_ - 1;
    }

    void rebuild(const std::vector<double>& rates) {
        for (int i = 0; i < n_; ++i) tree_[cap_ + i] = rates[i];
        for (int i = n_; i < static_cast<int>(cap_); ++i) tree_[cap_ + i] = 0.0;
        for (std::size_t pos = cap_ - 1; pos >= 1; --pos)
            tree_[pos] = tree_[2 * pos] + tree_[2 * pos + 1];
    }

  private:
    int n_ = 0;
    std::size_t cap_ = 1;
    std::vector<double> tree_;
};

}  // namespace metaspin
