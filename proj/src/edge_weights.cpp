#include "esw/edge_weights.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace esw {

void EdgeWeights::validate(std::int64_t n_edges) const {
    if (n_edges >= 0 && values.size() != static_cast<std::size_t>(n_edges))
        throw std::invalid_argument("EdgeWeights: length " + std::to_string(values.size()) +
                                    " does not match edge count " + std::to_string(n_edges));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] < 0.0)
            throw std::invalid_argument("EdgeWeights: invalid value at edge " + std::to_string(i));
    }
}

} // namespace esw
