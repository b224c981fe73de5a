#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cqn {

// Dense multi-index lattice {v : 0 <= v_d <= cap_d}, row-major addressing.
struct Lattice {
    std::vector<int> cap;
    std::vector<std::size_t> stride;
    std::size_t total = 1;

    Lattice() = default;
    explicit Lattice(std::vector<int> caps) : cap(std::move(caps)) {
        stride.assign(cap.size(), 1);
        for (int d = static_cast<int>(cap.size()) - 1; d >= 0; --d) {
            if (cap[d] < 0) throw std::invalid_argument("negative lattice cap");
            stride[d] = total;
            total *= static_cast<std::size_t>(cap[d]) + 1;
        }
    }

    std::size_t index(const std::vector<int>& v) const {
        std::size_t idx = 0;
        for (std::size_t d = 0; d < cap.size(); ++d) idx += stride[d] * static_cast<std::size_t>(v[d]);
        return idx;
    }

    bool contains(const std::vector<int>& v) const {
        for (std::size_t d = 0; d < cap.size(); ++d)
            if (v[d] < 0 || v[d] > cap[d]) return false;
        return true;
    }

    // Odometer increment in row-major (lexicographically increasing) order.
    bool next(std::vector<int>& v) const {
        for (int d = static_cast<int>(cap.size()) - 1; d >= 0; --d) {
            if (v[d] < cap[d]) {
                ++v[d];
                return true;
            }
            v[d] = 0;
        }
        return false;
    }
};

}  // namespace cqn
