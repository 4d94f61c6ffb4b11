#include "deqcert/losses.hpp"

#include "deqcert/errors.hpp"

#include <algorithm>
#include <cmath>

namespace deqcert {

std::string to_string(LossKind kind) { return kind == LossKind::l1 ? "l1" : "ce"; }

LossKind parse_loss(std::string_view name) {
    if (name == "l1") return LossKind::l1;
    if (name == "ce") return LossKind::cross_entropy_softmax;
    throw ConfigError("unknown loss '" + std::string(name) + "' (expected l1|ce)");
}

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* who) {
    if (a.size() != b.size())
        throw DimensionError(std::string(who) + ": prediction and target lengths differ");
}

} // namespace

double l1_loss(std::span<const double> pred, std::span<const double> target) {
    require_same_length(pred, target, "l1_loss");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - target[i]);
    return acc;
}

Vector l1_subgradient(std::span<const double> pred, std::span<const double> target) {
    require_same_length(pred, target, "l1_subgradient");
    Vector g(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double diff = pred[i] - target[i];
        g[i] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    }
    return g;
}

std::size_t hot_index(std::span<const double> target) {
    std::size_t hot = target.size();
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] == 1.0 && hot == target.size()) {
            hot = i;
        } else if (target[i] != 0.0) {
            throw DataError("target is not one-hot");
        }
    }
    if (hot == target.size()) throw DataError("target is not one-hot");
    return hot;
}

Vector softmax(std::span<const double> logits) {
    if (logits.empty()) throw DimensionError("softmax: empty logits");
    const double top = *std::max_element(logits.begin(), logits.end());
    Vector s(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        s[i] = std::exp(logits[i] - top);
        total += s[i];
    }
    for (double& v : s) v /= total;
    return s;
}

double ce_softmax_loss(std::span<const double> logits, std::span<const double> target) {
    require_same_length(logits, target, "ce_softmax_loss");
    const std::size_t k = hot_index(target);
    const auto top = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    // log(sum exp(z - z_top)) = log1p(sum over the other entries), accurate when one logit dominates.
    double rest = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
        if (i != top) rest += std::exp(logits[i] - logits[top]);
    return std::log1p(rest) + (logits[top] - logits[k]);
}

Vector ce_softmax_grad(std::span<const double> logits, std::span<const double> target) {
    require_same_length(logits, target, "ce_softmax_grad");
    const std::size_t k = hot_index(target);
    Vector g = softmax(logits);
    g[k] -= 1.0;
    return g;
}

double evaluate(const LossSpec& loss, std::span<const double> pred, std::span<const double> target) {
    return loss.kind == LossKind::l1 ? l1_loss(pred, target) : ce_softmax_loss(pred, target);
}

Vector gradient(const LossSpec& loss, std::span<const double> pred, std::span<const double> target) {
    return loss.kind == LossKind::l1 ? l1_subgradient(pred, target) : ce_softmax_grad(pred, target);
}

} // namespace deqcert
