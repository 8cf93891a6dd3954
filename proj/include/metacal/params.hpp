#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metacal/types.hpp"

namespace metacal {

/// Calibratable entries of SegmentParameters, in flattening order.
enum class ParamKind : int { tau, eta, kappa, a, v_free, rho_cr, beta, r };

inline constexpr std::array<ParamKind, 6> kMainParamKinds = {
    ParamKind::tau, ParamKind::eta, ParamKind::kappa,
    ParamKind::a,   ParamKind::v_free, ParamKind::rho_cr};

const char* param_kind_name(ParamKind kind);
std::optional<ParamKind> param_kind_from_name(const std::string& name);

double get_param(const SegmentParameters& p, ParamKind kind);
void set_param(SegmentParameters& p, ParamKind kind, double value);

struct KindBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Box bounds per parameter kind, expanded per segment when a layout is
/// built. Defaults are physically plausible METANET ranges consistent with
/// the CFL limit of the default geometry.
struct ParameterBounds {
  KindBounds tau{1.0 / 360.0, 1.0 / 30.0}; // 10 s .. 120 s
  KindBounds eta{10.0, 100.0};
  KindBounds kappa{1.0, 50.0};
  KindBounds a{1.0, 4.0};
  KindBounds v_free{60.0, 140.0};
  KindBounds rho_cr{15.0, 60.0};
  KindBounds beta{0.0, 0.5};
  KindBounds r{0.0, 2000.0};

  KindBounds for_kind(ParamKind kind) const;
};

struct ParamEntry {
  int segment = 0;
  ParamKind kind = ParamKind::tau;
  bool operator==(const ParamEntry&) const = default;
};

/// Flattening order of the calibratable entries for one parameter block:
/// for each segment the six main parameters, then beta if the segment has
/// an off-ramp, then r if it has an on-ramp. beta/r stay fixed at zero
/// elsewhere.
class ParamLayout {
 public:
  ParamLayout() = default;
  static ParamLayout for_geometry(const NetworkGeometry& geom);

  std::size_t size() const { return entries_.size(); }
  int num_segments() const { return num_segments_; }
  const std::vector<ParamEntry>& entries() const { return entries_; }
  const ParamEntry& entry(std::size_t i) const { return entries_[i]; }

  /// Index of (segment, kind) in the flat vector, or -1 when not calibrated.
  int index_of(int segment, ParamKind kind) const;

  std::vector<double> flatten(std::span<const SegmentParameters> params) const;
  std::vector<SegmentParameters> unflatten(std::span<const double> flat) const;

  /// Per-entry bounds in flattening order.
  void expand_bounds(const ParameterBounds& bounds,
                     std::vector<double>& lower, std::vector<double>& upper) const;

  bool operator==(const ParamLayout&) const = default;

 private:
  int num_segments_ = 0;
  std::vector<ParamEntry> entries_;
  std::vector<int> index_; // num_segments x 8 lookup, -1 when absent
};

/// Piecewise-constant-in-time parameters: block k applies to steps
/// [block_starts[k], block_starts[k+1]) and the last block runs to horizon.
struct ParameterSchedule {
  std::vector<int> block_starts;                      // ascending, front() == 0
  std::vector<std::vector<SegmentParameters>> blocks; // blocks[k][segment]
  int horizon = 0;

  int num_blocks() const { return static_cast<int>(blocks.size()); }
  int block_index_at(int t) const;
  const std::vector<SegmentParameters>& params_at(int t) const;

  static ParameterSchedule constant(std::vector<SegmentParameters> params, int horizon);
  void validate(const NetworkGeometry& geom) const;
};

/// Flat view of one or more schedule blocks together with elementwise
/// bounds. The solver works on the normalized image of `value` in [0,1]^n.
struct ParameterVector {
  ParamLayout layout;
  std::vector<int> block_starts{0};
  int horizon = 0;
  std::vector<double> value; // num_blocks * layout.size()
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t block_size() const { return layout.size(); }
  int num_blocks() const { return static_cast<int>(block_starts.size()); }
  std::size_t size() const { return value.size(); }

  std::span<const double> block_value(int k) const;
  ParameterSchedule to_schedule() const;

  std::vector<double> normalized() const;
  void set_normalized(std::span<const double> x);
  /// Maps a flat physical vector to [0,1]^n coordinates.
  std::vector<double> normalize(std::span<const double> physical) const;

  bool within_bounds(double tol = 0.0) const;
  void clamp_to_bounds();

  /// Single block covering [0, horizon).
  static ParameterVector single_block(const NetworkGeometry& geom,
                                      std::span<const SegmentParameters> params,
                                      const ParameterBounds& bounds, int horizon);
  static ParameterVector from_schedule(const NetworkGeometry& geom,
                                       const ParameterSchedule& schedule,
                                       const ParameterBounds& bounds);
};

/// Textbook METANET warm start: one SegmentParameters per segment, ramp
/// entries seeded only where the geometry has ramps.
std::vector<SegmentParameters> default_warm_start(const NetworkGeometry& geom);

} // namespace metacal
