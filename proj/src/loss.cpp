#include "polyfactor/loss.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace polyfactor {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

// log(sum_l exp(a_l)) with a_l = margin * 1[l != y] + o_l - o_y; fills the
// normalized weights into `rho` when given.
double shifted_logsumexp(int y, std::span<const double> o, double margin, double* rho) {
  const auto m = o.size();
  const double oy = o[static_cast<std::size_t>(y)];
  double amax = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    const double a = (static_cast<int>(l) != y ? margin : 0.0) + o[l] - oy;
    amax = std::max(amax, a);
  }
  double sum = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    const double a = (static_cast<int>(l) != y ? margin : 0.0) + o[l] - oy;
    const double e = std::exp(a - amax);
    if (rho) rho[l] = e;
    sum += e;
  }
  if (rho) {
    for (std::size_t l = 0; l < m; ++l) rho[l] /= sum;
  }
  return amax + std::log(sum);
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::logistic: return "logistic";
    case LossKind::smoothed_hinge: return "smoothed-hinge";
    case LossKind::squared_hinge: return "squared-hinge";
    case LossKind::binary_logistic: return "binary-logistic";
    case LossKind::squared: return "squared";
  }
  return "?";
}

LossKind parse_loss(std::string_view name) {
  for (auto k : {LossKind::logistic, LossKind::smoothed_hinge, LossKind::squared_hinge,
                 LossKind::binary_logistic, LossKind::squared}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

bool is_multiclass(LossKind kind) {
  return kind == LossKind::logistic || kind == LossKind::smoothed_hinge ||
         kind == LossKind::squared_hinge;
}

double loss_value(LossKind kind, const TargetRow& t, std::span<const double> o) {
  switch (kind) {
    case LossKind::logistic: return shifted_logsumexp(t.label, o, 0.0, nullptr);
    case LossKind::smoothed_hinge: return shifted_logsumexp(t.label, o, 1.0, nullptr);
    case LossKind::squared_hinge: {
      const double oy = o[static_cast<std::size_t>(t.label)];
      double sum = 0.0;
      for (std::size_t c = 0; c < o.size(); ++c) {
        if (static_cast<int>(c) == t.label) continue;
        const double h = std::max(1.0 + o[c] - oy, 0.0);
        sum += h * h;
      }
      return sum;
    }
    case LossKind::binary_logistic: {
      assert(t.signs.size() == o.size());
      double sum = 0.0;
      for (std::size_t c = 0; c < o.size(); ++c) sum += softplus(-t.signs[c] * o[c]);
      return sum;
    }
    case LossKind::squared: {
      const double r = o[0] - t.value;
      return 0.5 * r * r;
    }
  }
  return 0.0;
}

void loss_gradient(LossKind kind, const TargetRow& t, std::span<const double> o,
                   std::span<double> grad) {
  const auto m = o.size();
  switch (kind) {
    case LossKind::logistic:
    case LossKind::smoothed_hinge: {
      shifted_logsumexp(t.label, o, kind == LossKind::smoothed_hinge ? 1.0 : 0.0, grad.data());
      // rho_y is not part of the sum; component y collects -sum_{c != y} rho_c
      double off = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        if (static_cast<int>(c) != t.label) off += grad[c];
      }
      grad[static_cast<std::size_t>(t.label)] = -off;
      return;
    }
    case LossKind::squared_hinge: {
      const double oy = o[static_cast<std::size_t>(t.label)];
      double off = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        if (static_cast<int>(c) == t.label) continue;
        grad[c] = 2.0 * std::max(1.0 + o[c] - oy, 0.0);
        off += grad[c];
      }
      grad[static_cast<std::size_t>(t.label)] = -off;
      return;
    }
    case LossKind::binary_logistic:
      for (std::size_t c = 0; c < m; ++c) grad[c] = -t.signs[c] * sigmoid(-t.signs[c] * o[c]);
      return;
    case LossKind::squared:
      grad[0] = o[0] - t.value;
      return;
  }
}

double loss_value(LossKind kind, int label, std::span<const double> o) {
  TargetRow t;
  t.label = label;
  return loss_value(kind, t, o);
}

std::vector<double> loss_gradient(LossKind kind, int label, std::span<const double> o) {
  TargetRow t;
  t.label = label;
  std::vector<double> g(o.size());
  loss_gradient(kind, t, o, g);
  return g;
}

int output_dim(LossKind kind, const Dataset& ds) {
  switch (kind) {
    case LossKind::binary_logistic:
      if (!ds.has_signs()) throw ConfigError("binary-logistic loss needs a sign target matrix");
      return static_cast<int>(ds.signs.cols());
    case LossKind::squared: return 1;
    default: return ds.num_classes();
  }
}

}  // namespace polyfactor
