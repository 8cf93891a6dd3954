#include "metacal/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metacal {

namespace {
constexpr int kNumKinds = 8;
} // namespace

const char* param_kind_name(ParamKind kind) {
  switch (kind) {
    case ParamKind::tau: return "tau_h";
    case ParamKind::eta: return "eta";
    case ParamKind::kappa: return "kappa";
    case ParamKind::a: return "a";
    case ParamKind::v_free: return "v_free_kmh";
    case ParamKind::rho_cr: return "rho_cr";
    case ParamKind::beta: return "beta";
    case ParamKind::r: return "r_vph";
  }
  return "?";
}

std::optional<ParamKind> param_kind_from_name(const std::string& name) {
  for (int k = 0; k < kNumKinds; ++k) {
    auto kind = static_cast<ParamKind>(k);
    if (name == param_kind_name(kind)) return kind;
  }
  // short aliases used on the CLI
  if (name == "tau") return ParamKind::tau;
  if (name == "v_free") return ParamKind::v_free;
  if (name == "r") return ParamKind::r;
  return std::nullopt;
}

double get_param(const SegmentParameters& p, ParamKind kind) {
  switch (kind) {
    case ParamKind::tau: return p.tau_h;
    case ParamKind::eta: return p.eta;
    case ParamKind::kappa: return p.kappa;
    case ParamKind::a: return p.a;
    case ParamKind::v_free: return p.v_free_kmh;
    case ParamKind::rho_cr: return p.rho_cr;
    case ParamKind::beta: return p.beta;
    case ParamKind::r: return p.r_vph;
  }
  return 0.0;
}

void set_param(SegmentParameters& p, ParamKind kind, double value) {
  switch (kind) {
    case ParamKind::tau: p.tau_h = value; return;
    case ParamKind::eta: p.eta = value; return;
    case ParamKind::kappa: p.kappa = value; return;
    case ParamKind::a: p.a = value; return;
    case ParamKind::v_free: p.v_free_kmh = value; return;
    case ParamKind::rho_cr: p.rho_cr = value; return;
    case ParamKind::beta: p.beta = value; return;
    case ParamKind::r: p.r_vph = value; return;
  }
}

KindBounds ParameterBounds::for_kind(ParamKind kind) const {
  switch (kind) {
    case ParamKind::tau: return tau;
    case ParamKind::eta: return eta;
    case ParamKind::kappa: return kappa;
    case ParamKind::a: return a;
    case ParamKind::v_free: return v_free;
    case ParamKind::rho_cr: return rho_cr;
    case ParamKind::beta: return beta;
    case ParamKind::r: return r;
  }
  return {};
}

ParamLayout ParamLayout::for_geometry(const NetworkGeometry& geom) {
  geom.validate();
  ParamLayout layout;
  layout.num_segments_ = geom.num_segments;
  layout.index_.assign(static_cast<std::size_t>(geom.num_segments) * kNumKinds, -1);
  for (int s = 0; s < geom.num_segments; ++s) {
    for (ParamKind kind : kMainParamKinds) {
      layout.index_[s * kNumKinds + static_cast<int>(kind)] =
          static_cast<int>(layout.entries_.size());
      layout.entries_.push_back({s, kind});
    }
    if (geom.has_offramp(s)) {
      layout.index_[s * kNumKinds + static_cast<int>(ParamKind::beta)] =
          static_cast<int>(layout.entries_.size());
      layout.entries_.push_back({s, ParamKind::beta});
    }
    if (geom.has_onramp(s)) {
      layout.index_[s * kNumKinds + static_cast<int>(ParamKind::r)] =
          static_cast<int>(layout.entries_.size());
      layout.entries_.push_back({s, ParamKind::r});
    }
  }
  return layout;
}

int ParamLayout::index_of(int segment, ParamKind kind) const {
  if (segment < 0 || segment >= num_segments_) return -1;
  return index_[segment * kNumKinds + static_cast<int>(kind)];
}

std::vector<double> ParamLayout::flatten(std::span<const SegmentParameters> params) const {
  if (static_cast<int>(params.size()) != num_segments_)
    throw std::invalid_argument("flatten: wrong number of segments");
  std::vector<double> flat(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i)
    flat[i] = get_param(params[entries_[i].segment], entries_[i].kind);
  return flat;
}

std::vector<SegmentParameters> ParamLayout::unflatten(std::span<const double> flat) const {
  if (flat.size() != entries_.size())
    throw std::invalid_argument("unflatten: wrong vector length");
  std::vector<SegmentParameters> params(num_segments_);
  for (auto& p : params) { p.beta = 0.0; p.r_vph = 0.0; }
  for (std::size_t i = 0; i < entries_.size(); ++i)
    set_param(params[entries_[i].segment], entries_[i].kind, flat[i]);
  return params;
}

void ParamLayout::expand_bounds(const ParameterBounds& bounds,
                                std::vector<double>& lower,
                                std::vector<double>& upper) const {
  lower.resize(entries_.size());
  upper.resize(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    KindBounds kb = bounds.for_kind(entries_[i].kind);
    lower[i] = kb.lower;
    upper[i] = kb.upper;
  }
}

int ParameterSchedule::block_index_at(int t) const {
  if (blocks.empty()) throw std::logic_error("schedule has no blocks");
  int k = static_cast<int>(blocks.size()) - 1;
  while (k > 0 && block_starts[k] > t) --k;
  return k;
}

const std::vector<SegmentParameters>& ParameterSchedule::params_at(int t) const {
  return blocks[block_index_at(t)];
}

ParameterSchedule ParameterSchedule::constant(std::vector<SegmentParameters> params,
                                              int horizon) {
  ParameterSchedule s;
  s.block_starts = {0};
  s.blocks.push_back(std::move(params));
  s.horizon = horizon;
  return s;
}

void ParameterSchedule::validate(const NetworkGeometry& geom) const {
  if (blocks.empty() || block_starts.size() != blocks.size())
    throw std::invalid_argument("schedule: blocks/breakpoints mismatch");
  if (block_starts.front() != 0)
    throw std::invalid_argument("schedule: first block must start at t=0");
  for (std::size_t k = 1; k < block_starts.size(); ++k)
    if (block_starts[k] <= block_starts[k - 1] || block_starts[k] >= horizon)
      throw std::invalid_argument("schedule: breakpoints must be ascending and inside [0, horizon)");
  for (const auto& block : blocks)
    if (static_cast<int>(block.size()) != geom.num_segments)
      throw std::invalid_argument("schedule: block segment count != geometry");
}

std::span<const double> ParameterVector::block_value(int k) const {
  return std::span<const double>(value).subspan(k * block_size(), block_size());
}

ParameterSchedule ParameterVector::to_schedule() const {
  ParameterSchedule s;
  s.block_starts = block_starts;
  s.horizon = horizon;
  s.blocks.reserve(block_starts.size());
  for (int k = 0; k < num_blocks(); ++k)
    s.blocks.push_back(layout.unflatten(block_value(k)));
  return s;
}

std::vector<double> ParameterVector::normalized() const { return normalize(value); }

std::vector<double> ParameterVector::normalize(std::span<const double> physical) const {
  if (physical.size() != value.size())
    throw std::invalid_argument("normalize: wrong vector length");
  std::vector<double> x(physical.size());
  for (std::size_t i = 0; i < physical.size(); ++i) {
    const double range = upper[i] - lower[i];
    x[i] = range > 0.0 ? (physical[i] - lower[i]) / range : 0.0;
  }
  return x;
}

void ParameterVector::set_normalized(std::span<const double> x) {
  if (x.size() != value.size())
    throw std::invalid_argument("set_normalized: wrong vector length");
  for (std::size_t i = 0; i < x.size(); ++i)
    value[i] = lower[i] + x[i] * (upper[i] - lower[i]);
}

bool ParameterVector::within_bounds(double tol) const {
  for (std::size_t i = 0; i < value.size(); ++i)
    if (value[i] < lower[i] - tol || value[i] > upper[i] + tol) return false;
  return true;
}

void ParameterVector::clamp_to_bounds() {
  for (std::size_t i = 0; i < value.size(); ++i)
    value[i] = std::clamp(value[i], lower[i], upper[i]);
}

ParameterVector ParameterVector::single_block(const NetworkGeometry& geom,
                                              std::span<const SegmentParameters> params,
                                              const ParameterBounds& bounds, int horizon) {
  ParameterVector pv;
  pv.layout = ParamLayout::for_geometry(geom);
  pv.block_starts = {0};
  pv.horizon = horizon;
  pv.value = pv.layout.flatten(params);
  pv.layout.expand_bounds(bounds, pv.lower, pv.upper);
  return pv;
}

ParameterVector ParameterVector::from_schedule(const NetworkGeometry& geom,
                                               const ParameterSchedule& schedule,
                                               const ParameterBounds& bounds) {
  ParameterVector pv;
  pv.layout = ParamLayout::for_geometry(geom);
  pv.block_starts = schedule.block_starts;
  pv.horizon = schedule.horizon;
  std::vector<double> lower1, upper1;
  pv.layout.expand_bounds(bounds, lower1, upper1);
  for (const auto& block : schedule.blocks) {
    auto flat = pv.layout.flatten(block);
    pv.value.insert(pv.value.end(), flat.begin(), flat.end());
    pv.lower.insert(pv.lower.end(), lower1.begin(), lower1.end());
    pv.upper.insert(pv.upper.end(), upper1.begin(), upper1.end());
  }
  return pv;
}

std::vector<SegmentParameters> default_warm_start(const NetworkGeometry& geom) {
  std::vector<SegmentParameters> params(geom.num_segments);
  for (int s = 0; s < geom.num_segments; ++s) {
    SegmentParameters p; // textbook defaults from the struct initializers
    p.beta = geom.has_offramp(s) ? 0.1 : 0.0;
    p.r_vph = geom.has_onramp(s) ? 500.0 : 0.0;
    params[s] = p;
  }
  return params;
}

} // namespace metacal
