#include "kmcsvm/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "kmcsvm/rng.hpp"

namespace kmcsvm {

std::string style_name(Style s) { return s == Style::aggressive ? "aggressive" : "moderate"; }

void validate(const StyleProfile& profile) {
  if (profile.bands.empty()) throw Error("profile has no speed bands");
  double weight_sum = 0.0;
  for (const SpeedBand& b : profile.bands) {
    if (!(b.lo_kmh >= 0.0 && b.lo_kmh < b.hi_kmh && b.hi_kmh <= 140.0)) {
      throw Error("profile band outside [0, 140] km/h or empty");
    }
    if (!(b.weight > 0.0)) throw Error("profile band weight must be positive");
    if (!(b.throttle_mode >= 0.0 && b.throttle_mode <= 1.0)) {
      throw Error("profile throttle mode outside [0,1]");
    }
    if (!(b.throttle_concentration > 2.0)) {
      throw Error("profile throttle concentration must exceed 2");
    }
    weight_sum += b.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) {
    throw Error("profile band weights must sum to 1");
  }
  if (!(profile.noise_sd_speed >= 0.0) || !(profile.noise_sd_throttle >= 0.0)) {
    throw Error("profile noise standard deviations must be nonnegative");
  }
  if (!(profile.correlation >= 0.0 && profile.correlation < 1.0)) {
    throw Error("profile correlation must lie in [0, 1)");
  }
}

double band_mass(const StyleProfile& profile, double lo, double hi) {
  double mass = 0.0;
  for (const SpeedBand& b : profile.bands) {
    const double overlap = std::min(hi, b.hi_kmh) - std::max(lo, b.lo_kmh);
    if (overlap > 0.0) mass += b.weight * overlap / (b.hi_kmh - b.lo_kmh);
  }
  return mass;
}

namespace {

// Shipped calibrations, one text block per (style, group) in the profile
// file format. The single source of truth for every generator constant.

constexpr const char* kModerateGroup1 = R"(# moderate driver, group 1
correlation=0.95
noise_sd_speed=0.8
noise_sd_throttle=0.02
# lo_kmh,hi_kmh,weight,throttle_mode,throttle_concentration
band=5,40,0.45,0.25,7
band=40,65,0.40,0.35,7
band=65,80,0.135,0.45,7
band=80,95,0.015,0.50,7
)";

constexpr const char* kAggressiveGroup1 = R"(# aggressive driver, group 1
correlation=0.95
noise_sd_speed=0.8
noise_sd_throttle=0.02
band=30,50,0.10,0.55,6
band=50,75,0.28,0.65,6
band=75,95,0.47,0.75,6
band=95,115,0.15,0.85,6
)";

constexpr const char* kModerateGroup2 = R"(# moderate driver, group 2
correlation=0.95
noise_sd_speed=0.8
noise_sd_throttle=0.02
band=35,55,0.50,0.20,7
band=55,75,0.42,0.30,7
band=75,85,0.08,0.35,7
)";

constexpr const char* kAggressiveGroup2 = R"(# aggressive driver, group 2
correlation=0.95
noise_sd_speed=0.8
noise_sd_throttle=0.02
band=25,50,0.25,0.70,6
band=50,80,0.40,0.60,6
band=80,105,0.35,0.80,6
)";

double parse_number(std::string_view text, const std::string& name, std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(name + ": malformed number at line " + std::to_string(line_no) + ": '" +
                     std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

// Marsaglia-Tsang, shape >= 1.
double sample_gamma(Rng& rng, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_beta(Rng& rng, double a, double b) {
  const double ga = sample_gamma(rng, a);
  const double gb = sample_gamma(rng, b);
  return ga / (ga + gb);
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730951); }

}  // namespace

StyleProfile parse_profile(std::istream& in, const std::string& name) {
  StyleProfile profile;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(name + ": expected key=value at line " + std::to_string(line_no));
    }
    const std::string key = line.substr(0, eq);
    const std::string_view value = std::string_view(line).substr(eq + 1);
    if (key == "correlation") {
      profile.correlation = parse_number(value, name, line_no);
    } else if (key == "noise_sd_speed") {
      profile.noise_sd_speed = parse_number(value, name, line_no);
    } else if (key == "noise_sd_throttle") {
      profile.noise_sd_throttle = parse_number(value, name, line_no);
    } else if (key == "band") {
      const auto fields = split(value, ',');
      if (fields.size() != 5) {
        throw ParseError(name + ": band needs 5 comma-separated values at line " +
                         std::to_string(line_no));
      }
      SpeedBand b;
      b.lo_kmh = parse_number(fields[0], name, line_no);
      b.hi_kmh = parse_number(fields[1], name, line_no);
      b.weight = parse_number(fields[2], name, line_no);
      b.throttle_mode = parse_number(fields[3], name, line_no);
      b.throttle_concentration = parse_number(fields[4], name, line_no);
      profile.bands.push_back(b);
    } else {
      throw ParseError(name + ": unknown key '" + key + "' at line " + std::to_string(line_no));
    }
  }
  validate(profile);
  return profile;
}

StyleProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return parse_profile(in, path);
}

void write_profile(const StyleProfile& profile, std::ostream& out) {
  auto fmt = [](double v) { return format_double(v); };
  out << "correlation=" << fmt(profile.correlation) << '\n';
  out << "noise_sd_speed=" << fmt(profile.noise_sd_speed) << '\n';
  out << "noise_sd_throttle=" << fmt(profile.noise_sd_throttle) << '\n';
  for (const SpeedBand& b : profile.bands) {
    out << "band=" << fmt(b.lo_kmh) << ',' << fmt(b.hi_kmh) << ',' << fmt(b.weight) << ','
        << fmt(b.throttle_mode) << ',' << fmt(b.throttle_concentration) << '\n';
  }
}

StyleProfile default_profile(Style style, int group) {
  if (group != 1 && group != 2) throw Error("profile group must be 1 or 2");
  const char* text = nullptr;
  if (style == Style::moderate) {
    text = group == 1 ? kModerateGroup1 : kModerateGroup2;
  } else {
    text = group == 1 ? kAggressiveGroup1 : kAggressiveGroup2;
  }
  std::istringstream in(text);
  return parse_profile(in, "builtin profile");
}

Dataset generate(const GenConfig& cfg) {
  validate(cfg.profile);
  if (!(cfg.sample_rate > 0)) throw Error("generate requires a positive sample rate");
  if (cfg.label != kAggressiveLabel && cfg.label != kModerateLabel) {
    throw Error("generate label must be +1 or -1");
  }
  const long n = std::lround(cfg.duration_seconds * cfg.sample_rate);
  if (n < 1) throw Error("duration * rate must be at least one sample");

  const auto& bands = cfg.profile.bands;
  std::vector<double> cumulative(bands.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    acc += bands[i].weight;
    cumulative[i] = acc;
  }
  cumulative.back() = 1.0;

  // Speed path: latent AR(1) Gaussian mapped through the mixture quantile,
  // so the marginal follows the band weights exactly while consecutive
  // samples stay correlated. Throttle follows the band's beta draw through
  // its own AR(1) state.
  const double rho = cfg.profile.correlation;
  const double innovation = std::sqrt(1.0 - rho * rho);

  Dataset ds;
  ds.sample_rate = cfg.sample_rate;
  ds.samples.reserve(n);
  Rng rng(cfg.seed);

  double latent = rng.normal();
  double throttle_state = 0.0;
  for (long t = 0; t < n; ++t) {
    if (t > 0) latent = rho * latent + innovation * rng.normal();
    double u = standard_normal_cdf(latent);
    u = std::clamp(u, 1e-12, 1.0 - 1e-12);

    std::size_t band_idx = 0;
    while (band_idx + 1 < bands.size() && u >= cumulative[band_idx]) ++band_idx;
    const SpeedBand& band = bands[band_idx];
    const double cum_lo = band_idx == 0 ? 0.0 : cumulative[band_idx - 1];
    const double frac = (u - cum_lo) / band.weight;
    const double base_speed = band.lo_kmh + frac * (band.hi_kmh - band.lo_kmh);

    const double kappa = band.throttle_concentration - 2.0;
    const double target = sample_beta(rng, 1.0 + band.throttle_mode * kappa,
                                      1.0 + (1.0 - band.throttle_mode) * kappa);
    throttle_state = t == 0 ? target : rho * throttle_state + (1.0 - rho) * target;

    Sample s;
    s.speed = std::max(0.0, base_speed + cfg.profile.noise_sd_speed * rng.normal());
    s.throttle =
        std::clamp(throttle_state + cfg.profile.noise_sd_throttle * rng.normal(), 0.0, 1.0);
    s.label = cfg.label;
    ds.samples.push_back(s);
  }
  return ds;
}

CohortResult generate_cohort(int drivers_per_style, int runs_per_driver, const GenConfig& base,
                             int group) {
  if (drivers_per_style < 1 || runs_per_driver < 1) {
    throw Error("cohort needs at least one driver and one run");
  }

  CohortResult out;
  out.data.sample_rate = base.sample_rate;
  out.runs.subset_count = 2 * drivers_per_style * runs_per_driver;

  int subset = 0;
  for (int driver = 0; driver < drivers_per_style; ++driver) {
    for (const Style style : {Style::aggressive, Style::moderate}) {
      const int style_idx = style == Style::aggressive ? 0 : 1;
      const std::uint64_t driver_seed =
          derive_seed(base.seed, static_cast<std::uint64_t>(style_idx) * 1000003u + driver);
      GenConfig run_cfg = base;
      run_cfg.profile = default_profile(style, group);
      run_cfg.label = style == Style::aggressive ? kAggressiveLabel : kModerateLabel;
      for (int run = 0; run < runs_per_driver; ++run) {
        run_cfg.seed = derive_seed(driver_seed, run);
        const Dataset trace = generate(run_cfg);
        out.data.samples.insert(out.data.samples.end(), trace.samples.begin(),
                                trace.samples.end());
        out.runs.assignments.insert(out.runs.assignments.end(), trace.samples.size(), subset);
        ++subset;
      }
    }
  }
  return out;
}

}  // namespace kmcsvm
