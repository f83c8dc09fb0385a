#include "kmcsvm/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "kmcsvm/rng.hpp"

namespace kmcsvm {

namespace {

constexpr const char* kCsvHeader = "speed_kmh,throttle,label";

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

double parse_double(std::string_view field, const std::string& name, std::size_t line_no,
                    const char* what) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError(name + ": malformed " + what + " at line " + std::to_string(line_no) +
                     ": '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Dataset parse_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name + ": empty file");
  strip_cr(line);
  if (line != kCsvHeader) {
    throw ParseError(name + ": expected header '" + std::string(kCsvHeader) + "', got '" +
                     line + "'");
  }

  Dataset ds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;

    std::string_view row(line);
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c1 == std::string_view::npos || c2 == std::string_view::npos ||
        row.find(',', c2 + 1) != std::string_view::npos) {
      throw ParseError(name + ": malformed row at line " + std::to_string(line_no) +
                       ": expected 3 fields");
    }

    Sample s;
    s.speed = parse_double(row.substr(0, c1), name, line_no, "speed");
    s.throttle = parse_double(row.substr(c1 + 1, c2 - c1 - 1), name, line_no, "throttle");
    const double label = parse_double(row.substr(c2 + 1), name, line_no, "label");

    if (!(s.speed >= 0.0)) {
      throw ParseError(name + ": negative speed at line " + std::to_string(line_no));
    }
    if (!(s.throttle >= 0.0 && s.throttle <= 1.0)) {
      throw ParseError(name + ": throttle outside [0,1] at line " + std::to_string(line_no));
    }
    if (label != 1.0 && label != -1.0) {
      throw ParseError(name + ": label outside {+1,-1} at line " + std::to_string(line_no));
    }
    s.label = label > 0 ? kAggressiveLabel : kModerateLabel;
    ds.samples.push_back(s);
  }
  if (ds.empty()) throw Error(name + ": empty dataset");
  return ds;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return parse_csv(in, path);
}

void write_csv(const Dataset& ds, std::ostream& out) {
  if (ds.empty()) throw Error("refusing to write an empty dataset");
  out << kCsvHeader << '\n';
  for (const Sample& s : ds.samples) {
    out << format_double(s.speed) << ',' << format_double(s.throttle) << ',' << s.label
        << '\n';
  }
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_csv(ds, out);
  out.flush();
  if (!out) throw Error("write failed for '" + path + "'");
}

SubsetPartition partition(const Dataset& ds, int subset_count, std::uint64_t seed,
                          bool contiguous) {
  const auto n = static_cast<long>(ds.size());
  if (subset_count <= 1 || subset_count > n) {
    throw Error("subset count must satisfy 1 < z <= " + std::to_string(n) + ", got " +
                std::to_string(subset_count));
  }

  std::vector<int> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  if (!contiguous) {
    Rng rng(seed);
    rng.shuffle(order);
  }

  SubsetPartition part;
  part.subset_count = subset_count;
  part.assignments.assign(ds.size(), 0);

  // First n % z subsets take one extra sample.
  const long base = n / subset_count;
  const long extra = n % subset_count;
  long pos = 0;
  for (int s = 0; s < subset_count; ++s) {
    const long size = base + (s < extra ? 1 : 0);
    for (long i = 0; i < size; ++i) part.assignments[order[pos++]] = s;
  }
  return part;
}

AffineScaler fit_standard_scaler(const Dataset& ds) {
  if (ds.empty()) throw Error("cannot fit a scaler on an empty dataset");
  double mean_s = 0.0, mean_t = 0.0;
  for (const Sample& s : ds.samples) {
    mean_s += s.speed;
    mean_t += s.throttle;
  }
  const double n = static_cast<double>(ds.size());
  mean_s /= n;
  mean_t /= n;
  double var_s = 0.0, var_t = 0.0;
  for (const Sample& s : ds.samples) {
    var_s += (s.speed - mean_s) * (s.speed - mean_s);
    var_t += (s.throttle - mean_t) * (s.throttle - mean_t);
  }
  const double sd_s = std::sqrt(var_s / n);
  const double sd_t = std::sqrt(var_t / n);

  AffineScaler sc;
  sc.speed_offset = mean_s;
  sc.speed_scale = sd_s > 0 ? 1.0 / sd_s : 1.0;
  sc.throttle_offset = mean_t;
  sc.throttle_scale = sd_t > 0 ? 1.0 / sd_t : 1.0;
  return sc;
}

std::vector<LabeledPoint> to_labeled_points(const Dataset& ds) {
  std::vector<LabeledPoint> pts;
  pts.reserve(ds.size());
  for (const Sample& s : ds.samples) pts.push_back({s.point(), s.label});
  return pts;
}

std::uint64_t dataset_checksum(const Dataset& ds) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  auto mix = [&hash](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash ^= bytes[i];
      hash *= 0x00000100000001B3ULL;
    }
  };
  const std::uint64_t count = ds.size();
  mix(&count, sizeof(count));
  mix(&ds.sample_rate, sizeof(ds.sample_rate));
  for (const Sample& s : ds.samples) {
    mix(&s.speed, sizeof(s.speed));
    mix(&s.throttle, sizeof(s.throttle));
    const signed char label = static_cast<signed char>(s.label);
    mix(&label, sizeof(label));
  }
  return hash;
}

}  // namespace kmcsvm
