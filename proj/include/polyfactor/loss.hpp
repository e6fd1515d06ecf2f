#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polyfactor/dataset.hpp"

namespace polyfactor {

/// Convex losses l(y, o) over an output vector o.
///
/// The three multi-class losses are written as
///   grad l(y, o) = sum_{c != y} rho_c(y, o) (e_c - e_y)
/// with rho_c the softmax weight (logistic), the margin-shifted softmax
/// weight (smoothed hinge) or 2 max(1 + o_c - o_y, 0) (squared hinge).
/// binary_logistic treats each output independently against a {-1,+1}
/// target row; squared is the single-output regression loss 1/2 (o - v)^2.
enum class LossKind { logistic, smoothed_hinge, squared_hinge, binary_logistic, squared };

std::string_view to_string(LossKind kind);
LossKind parse_loss(std::string_view name);

/// True for losses whose target is a class index.
bool is_multiclass(LossKind kind);

double loss_value(LossKind kind, const TargetRow& target, std::span<const double> o);
void loss_gradient(LossKind kind, const TargetRow& target, std::span<const double> o,
                   std::span<double> grad);

double loss_value(LossKind kind, int label, std::span<const double> o);
std::vector<double> loss_gradient(LossKind kind, int label, std::span<const double> o);

/// Number of model outputs the loss needs for `ds`.
int output_dim(LossKind kind, const Dataset& ds);

double sigmoid(double z);

}  // namespace polyfactor
