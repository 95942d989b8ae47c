#pragma once
// The property suite run by `qrect verify` and by the acceptance binary.
// Every property reduces its cases to a few checks (worst value against a
// bound); the CSV holds only those, so reruns are byte-identical.

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrect/beta.hpp"
#include "qrect/parabolic.hpp"

namespace qrect {

struct Check {
  std::string label;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct PropertyResult {
  int id = 0;
  std::string name;
  double limit_seconds = 0.0;
  double seconds = 0.0;  // wall time, never written to CSV
  std::vector<Check> checks;

  bool pass() const;
};

struct SuiteOptions {
  std::uint64_t seed = 7;
  QuadratureSpec quad;
  /// Property ids to run; empty runs all.
  std::vector<int> only;
};

struct PropertySpec {
  int id;
  std::string_view name;
  double limit_seconds;
  PropertyResult (*run)(const SuiteOptions&);
};

/// Properties 1..9. Determinism of the CSV (property 10) is a property of
/// whole runs and is checked by the acceptance binary.
std::span<const PropertySpec> property_table();

PropertyResult check_affine_annihilation(const SuiteOptions& o);
PropertyResult check_norm_monotonicity(const SuiteOptions& o);
PropertyResult check_grassmannian_normalization(const SuiteOptions& o);
PropertyResult check_carleson_decay(const SuiteOptions& o);
PropertyResult check_combination_certificate(const SuiteOptions& o);
PropertyResult check_restricted_consistency(const SuiteOptions& o);
PropertyResult check_holder_exponent(const SuiteOptions& o);
PropertyResult check_reconstruction(const SuiteOptions& o);
PropertyResult check_rademacher(const SuiteOptions& o);

std::vector<PropertyResult> run_suite(const SuiteOptions& o,
                                      const std::function<void(const PropertyResult&)>& on_done = {});

/// property,name,check,value,bound,pass
void write_verify_csv(std::ostream& out, const std::vector<PropertyResult>& results);

/// Euclidean catalog used by the suite for dimension n (affine, random
/// piecewise-linear ridge, cone, distance to points, bump, square).
std::vector<std::pair<std::string, Field>> euclidean_catalog(std::size_t n, std::uint64_t seed);

/// Parabolic catalog on R^{n-1} x R: g(x) + h(t) for the spatial entries
/// above and h in {0, sin t, t}, plus the product field.
std::vector<std::pair<std::string, Field>> parabolic_catalog(std::size_t n, std::uint64_t seed);

/// Runs whose outputs tools/calibrate freezes into calibration.hpp.
/// Ridge kink at 1/3 on [0,1]^n, C = 3, beta_2, depth 10 (n = 1) or 6 (n = 2).
CarlesonReport suite_carleson(std::size_t n, const SuiteOptions& o);
/// |x| + sin t on 64 random parabolic boxes, L = 1.
HolderReport suite_holder(const SuiteOptions& o, double constant);
/// Cone at the centre, bump, random 4-breakpoint ridge.
std::vector<std::pair<std::string, Field>> reconstruction_catalog(std::size_t n, std::uint64_t seed);

}  // namespace qrect
