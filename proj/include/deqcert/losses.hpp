#pragma once

#include "deqcert/numerics.hpp"

#include <span>
#include <string>
#include <string_view>

namespace deqcert {

enum class LossKind { l1, cross_entropy_softmax };

struct LossSpec {
    LossKind kind = LossKind::l1;

    // 1 for the l1 loss, 2 for cross entropy of softmax.
    double lipschitz_constant() const noexcept { return kind == LossKind::l1 ? 1.0 : 2.0; }
};

std::string to_string(LossKind kind);
LossKind parse_loss(std::string_view name);

double l1_loss(std::span<const double> pred, std::span<const double> target);
// Subgradient sign(pred - target), 0 at ties.
Vector l1_subgradient(std::span<const double> pred, std::span<const double> target);

// Index of the single 1 in a one-hot vector; throws DataError otherwise.
std::size_t hot_index(std::span<const double> target);

Vector softmax(std::span<const double> logits);
// -log softmax_k(logits) with max subtraction.
double ce_softmax_loss(std::span<const double> logits, std::span<const double> target);
// softmax(logits) - target
Vector ce_softmax_grad(std::span<const double> logits, std::span<const double> target);

double evaluate(const LossSpec& loss, std::span<const double> pred, std::span<const double> target);
Vector gradient(const LossSpec& loss, std::span<const double> pred, std::span<const double> target);

} // namespace deqcert
