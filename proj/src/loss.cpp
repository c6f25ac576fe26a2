#include "tubular/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tubular {

namespace {

constexpr double kEps = kProbabilityClamp;

double clamped(double p) { return std::clamp(p, kEps, 1.0 - kEps); }

// Unvalidated evaluation shared by the public entry points and the
// finite-difference harness (whose perturbed rows no longer sum to one).
double cls_value(const ProbabilityField& p, const LabelMap& label, const ClassWeights& w,
                 Grid<double>* gradient) {
  std::vector<double> terms(p.size());
  for (std::size_t n = 0; n < p.size(); ++n) {
    const double pv = clamped(p[n]);
    const bool active = p[n] < kEps || p[n] > 1.0 - kEps;
    if (label[n] != 0) {
      terms[n] = -w.positive * std::log(pv);
      if (gradient) (*gradient)[n] = active ? 0.0 : -w.positive / pv;
    } else {
      terms[n] = -w.negative * std::log(1.0 - pv);
      if (gradient) (*gradient)[n] = active ? 0.0 : w.negative / (1.0 - pv);
    }
  }
  return pairwise_sum(terms);
}

double dis_value(const ScaleProbabilityField& g, const ScaleClassMap& z, double beta, double lambda,
                 ScaleProbabilityField* gradient) {
  const int bins = g.bins();
  std::vector<double> terms(g.voxel_count(), 0.0);
  for (std::size_t n = 0; n < g.voxel_count(); ++n) {
    const int zv = z.classes[n];
    if (zv < 1 || zv > bins) continue;
    const double g_true = g.at(n, zv);
    double term = std::log(std::max(g_true, kEps));
    if (gradient && g_true >= kEps) gradient->at(n, zv) += -beta / g_true;

    const int top = g.argmax(n);
    const double weight = static_cast<double>(std::abs(top - zv)) / bins;
    if (weight > 0.0) {
      const double rest = 1.0 - g.at(n, top);
      term += lambda * weight * std::log(std::max(rest, kEps));
      if (gradient && rest >= kEps) gradient->at(n, top) += beta * lambda * weight / rest;
    }
    terms[n] = -beta * term;
  }
  return pairwise_sum(terms);
}

void require_probability_range(std::span<const double> values, const std::string& what) {
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError(what + ": probabilities must lie in [0, 1]");
    }
  }
}

void require_scale_inputs(const ScaleProbabilityField& g, const ScaleClassMap& z) {
  require_same_dims(g.geometry(), z.classes.geometry(), "dis_loss");
  if (g.bins() != z.bins) {
    throw ValidationError("dis_loss: K mismatch (g has " + std::to_string(g.bins()) +
                          " classes, z has " + std::to_string(z.bins) + ")");
  }
  for (std::size_t n = 0; n < g.voxel_count(); ++n) {
    const int zv = z.classes[n];
    if (zv < 0 || zv > z.bins) {
      throw ValidationError("dis_loss: scale class out of range at voxel " + std::to_string(n));
    }
    double sum = 0.0;
    for (double v : g.row(n)) {
      if (!(v >= 0.0)) throw ValidationError("dis_loss: negative scale probability");
      sum += v;
    }
    if (sum > 1.0 + 1e-6 || (zv >= 1 && std::abs(sum - 1.0) > 1e-6)) {
      throw ValidationError("dis_loss: scale probabilities at voxel " + std::to_string(n) +
                            " do not sum to 1");
    }
  }
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return scale == 0.0 ? 0.0 : std::abs(analytic - numeric) / scale;
}

}  // namespace

ScaleProbabilityField::ScaleProbabilityField(Geometry geometry, int bins, double fill)
    : geometry_(geometry), bins_(bins) {
  if (bins < 1) {
    throw ValidationError("scale probability field needs K >= 1, got " + std::to_string(bins));
  }
  values_.assign(geometry.voxel_count() * static_cast<std::size_t>(bins), fill);
}

int ScaleProbabilityField::argmax(std::size_t n) const {
  const auto r = row(n);
  return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin()) + 1;
}

std::vector<Grid<float>> ScaleProbabilityField::to_channels() const {
  std::vector<Grid<float>> out(static_cast<std::size_t>(bins_), Grid<float>(geometry_));
  for (std::size_t n = 0; n < voxel_count(); ++n) {
    for (int k = 1; k <= bins_; ++k) out[static_cast<std::size_t>(k - 1)][n] = static_cast<float>(at(n, k));
  }
  return out;
}

ScaleProbabilityField ScaleProbabilityField::from_channels(const std::vector<Grid<float>>& channels) {
  if (channels.empty()) {
    throw ValidationError("scale probability field needs at least one channel");
  }
  ScaleProbabilityField g(channels.front().geometry(), static_cast<int>(channels.size()));
  for (std::size_t c = 0; c < channels.size(); ++c) {
    require_same_dims(g.geometry(), channels[c].geometry(), "scale probability channels");
    for (std::size_t n = 0; n < g.voxel_count(); ++n) {
      g.at(n, static_cast<int>(c) + 1) = channels[c][n];
    }
  }
  return g;
}

double pairwise_sum(std::span<const double> terms) {
  if (terms.size() <= 8) {
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
  }
  const std::size_t half = terms.size() / 2;
  return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

ClassWeights class_weights(const LabelMap& label) {
  require_binary(label, "class_weights");
  const std::size_t fg = count_foreground(label);
  const std::size_t bg = label.size() - fg;
  if (fg == 0 || bg == 0) {
    throw DegenerateInputError("class_weights: label map must contain both foreground and background");
  }
  return {0.5 / static_cast<double>(fg), 0.5 / static_cast<double>(bg)};
}

ClsLoss cls_loss(const ProbabilityField& p, const LabelMap& label) {
  require_same_dims(p.geometry(), label.geometry(), "cls_loss");
  require_probability_range(p.values(), "cls_loss");
  const ClassWeights w = class_weights(label);
  ClsLoss out{0.0, Grid<double>(p.geometry())};
  out.value = cls_value(p, label, w, &out.gradient);
  return out;
}

DisLoss dis_loss(const ScaleProbabilityField& g, const ScaleClassMap& z, double beta_positive,
                 double lambda) {
  require_scale_inputs(g, z);
  if (!(beta_positive > 0.0)) throw ValidationError("dis_loss: beta_p must be positive");
  if (!(lambda >= 0.0)) throw ValidationError("dis_loss: lambda must be nonnegative");
  DisLoss out{0.0, ScaleProbabilityField(g.geometry(), g.bins())};
  out.value = dis_value(g, z, beta_positive, lambda, &out.gradient);
  return out;
}

LossBreakdown total_loss(const ProbabilityField& p, const ScaleProbabilityField& g,
                         const LabelMap& label, const ScaleClassMap& z, double lambda) {
  require_same_dims(label.geometry(), z.classes.geometry(), "total_loss");
  const ClassWeights w = class_weights(label);
  LossBreakdown out;
  out.beta_positive = w.positive;
  out.beta_negative = w.negative;
  out.cls = cls_loss(p, label).value;
  out.dis = dis_loss(g, z, w.positive, lambda).value;
  out.total = out.cls + out.dis;
  return out;
}

double finite_difference_check(LossKind kind, const LossInstance& instance, double step) {
  if (!(step > 0.0)) throw ValidationError("finite_difference_check: step must be positive");
  const double margin = 10.0 * step;
  const ClassWeights w = class_weights(instance.label);
  double worst = 0.0;

  if (kind == LossKind::classification) {
    const ProbabilityField& p = instance.p;
    require_same_dims(p.geometry(), instance.label.geometry(), "finite_difference_check");
    for (double v : p.values()) {
      if (v - kEps < margin || (1.0 - kEps) - v < margin) {
        throw ValidationError("finite_difference_check: probability within 10*step of the clamp");
      }
    }
    Grid<double> analytic(p.geometry());
    cls_value(p, instance.label, w, &analytic);
    ProbabilityField probe = p;
    for (std::size_t n = 0; n < p.size(); ++n) {
      probe[n] = p[n] + step;
      const double up = cls_value(probe, instance.label, w, nullptr);
      probe[n] = p[n] - step;
      const double down = cls_value(probe, instance.label, w, nullptr);
      probe[n] = p[n];
      worst = std::max(worst, relative_error(analytic[n], (up - down) / (2.0 * step)));
    }
    return worst;
  }

  const ScaleProbabilityField& g = instance.g;
  require_scale_inputs(g, instance.z);
  for (std::size_t n = 0; n < g.voxel_count(); ++n) {
    const int zv = instance.z.classes[n];
    if (zv < 1) continue;
    const auto r = g.row(n);
    const int top = g.argmax(n);
    for (int k = 1; k <= g.bins(); ++k) {
      if (k != top && r[static_cast<std::size_t>(top - 1)] - r[static_cast<std::size_t>(k - 1)] < margin) {
        throw ValidationError("finite_difference_check: argmax tie at voxel " + std::to_string(n));
      }
    }
    if (g.at(n, zv) - kEps < margin || (1.0 - g.at(n, top)) - kEps < margin) {
      throw ValidationError("finite_difference_check: probability within 10*step of the clamp");
    }
  }
  ScaleProbabilityField analytic(g.geometry(), g.bins());
  dis_value(g, instance.z, w.positive, instance.lambda, &analytic);
  ScaleProbabilityField probe = g;
  for (std::size_t i = 0; i < g.values().size(); ++i) {
    const double original = g.values()[i];
    probe.values()[i] = original + step;
    const double up = dis_value(probe, instance.z, w.positive, instance.lambda, nullptr);
    probe.values()[i] = original - step;
    const double down = dis_value(probe, instance.z, w.positive, instance.lambda, nullptr);
    probe.values()[i] = original;
    worst = std::max(worst, relative_error(analytic.values()[i], (up - down) / (2.0 * step)));
  }
  return worst;
}

}  // namespace tubular
