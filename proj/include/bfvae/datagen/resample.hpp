#pragma once

#include <algorithm>
#include <span>
#include <string>

#include "bfvae/error.hpp"
#include "bfvae/ndcore/matrix.hpp"

namespace bfvae {

/// Piecewise-linear interpolation from (src_nodes, values) onto dst_nodes.
/// Never extrapolates: every destination must lie inside the source hull.
inline Vector resample_linear(std::span<const double> values, std::span<const double> src_nodes,
                              std::span<const double> dst_nodes) {
    require_shape(values.size() == src_nodes.size(), "resample_linear: values/nodes length mismatch");
    require_shape(src_nodes.size() >= 2, "resample_linear: need at least two source nodes");
    for (std::size_t i = 1; i < src_nodes.size(); ++i)
        if (!(src_nodes[i] > src_nodes[i - 1]))
            throw UsageError("resample_linear: source nodes must be strictly increasing");
    Vector out(dst_nodes.size());
    for (std::size_t k = 0; k < dst_nodes.size(); ++k) {
        const double x = dst_nodes[k];
        if (!(x >= src_nodes.front() && x <= src_nodes.back()))
            throw UsageError("resample_linear: destination " + std::to_string(x) +
                             " outside source range");
        // first node strictly greater than x, clamped so [hi-1, hi] is a valid cell
        auto it = std::upper_bound(src_nodes.begin(), src_nodes.end(), x);
        std::size_t hi = static_cast<std::size_t>(it - src_nodes.begin());
        hi = std::clamp<std::size_t>(hi, 1, src_nodes.size() - 1);
        const std::size_t lo = hi - 1;
        const double t = (x - src_nodes[lo]) / (src_nodes[hi] - src_nodes[lo]);
        out[k] = (1.0 - t) * values[lo] + t * values[hi];
    }
    return out;
}

}  // namespace bfvae
