#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "bfvae/error.hpp"

namespace bfvae {

enum class Activation : std::uint8_t { Identity = 0, ReLU = 1, GeLU = 2 };

struct ActivationValue {
    double value;
    double derivative;
};

inline ActivationValue relu(double x) noexcept {
    // derivative at 0 is taken as 0
    return x > 0.0 ? ActivationValue{x, 1.0} : ActivationValue{0.0, 0.0};
}

/// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
inline ActivationValue gelu(double x) noexcept {
    constexpr double kC = 0.044715;
    const double k = std::sqrt(2.0 / std::numbers::pi);
    const double inner = k * (x + kC * x * x * x);
    const double t = std::tanh(inner);
    const double value = 0.5 * x * (1.0 + t);
    const double dinner = k * (1.0 + 3.0 * kC * x * x);
    const double derivative = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
    return {value, derivative};
}

inline ActivationValue activate(Activation a, double x) noexcept {
    switch (a) {
        case Activation::ReLU: return relu(x);
        case Activation::GeLU: return gelu(x);
        case Activation::Identity: break;
    }
    return {x, 1.0};
}

inline std::string_view to_string(Activation a) noexcept {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::GeLU: return "gelu";
        case Activation::Identity: break;
    }
    return "identity";
}

inline Activation parse_activation(std::string_view s) {
    if (s == "gelu") return Activation::GeLU;
    if (s == "relu") return Activation::ReLU;
    if (s == "identity") return Activation::Identity;
    throw UsageError("unknown activation '" + std::string(s) + "'");
}

inline Activation activation_from_tag(std::uint8_t tag) {
    if (tag > 2) throw ShapeError("invalid activation tag " + std::to_string(tag));
    return static_cast<Activation>(tag);
}

}  // namespace bfvae
