#include "kmcsvm/report_io.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace kmcsvm {

namespace {

using nlohmann::json;

json eval_to_json(const EvalReport& r) {
  return json{{"mode", r.mode == EvalMode::offline ? "offline" : "online"},
              {"accuracy_agg", r.accuracy_agg},
              {"accuracy_mod", r.accuracy_mod},
              {"correct_agg", r.correct_agg},
              {"total_agg", r.total_agg},
              {"correct_mod", r.correct_mod},
              {"total_mod", r.total_mod}};
}

EvalReport eval_from_json(const json& j) {
  const std::string mode = j.at("mode").get<std::string>();
  if (mode != "offline" && mode != "online") throw ParseError("unknown eval mode: " + mode);
  return make_eval_report(j.at("correct_agg").get<long>(), j.at("total_agg").get<long>(),
                          j.at("correct_mod").get<long>(), j.at("total_mod").get<long>(),
                          mode == "offline" ? EvalMode::offline : EvalMode::online);
}

Method method_from_string(const std::string& s) {
  if (s == "kmc_svm") return Method::kmc_svm;
  if (s == "svm") return Method::svm;
  throw ParseError("unknown method: " + s);
}

}  // namespace

std::string to_json_line(const EvalReport& report) {
  json j = eval_to_json(report);
  j["type"] = "eval";
  return j.dump();
}

std::string to_json_line(const BenchReport& report) {
  json j{{"type", "bench"},
         {"method", method_name(report.method)},
         {"train_seconds", report.train_seconds},
         {"cluster_seconds", report.cluster_seconds},
         {"sv_count", report.sv_count},
         {"converged", report.converged},
         {"eval", eval_to_json(report.eval)}};
  return j.dump();
}

EvalReport eval_report_from_json(const std::string& line) {
  try {
    return eval_from_json(json::parse(line));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad eval report line: ") + e.what());
  }
}

BenchReport bench_report_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    BenchReport r;
    r.method = method_from_string(j.at("method").get<std::string>());
    r.train_seconds = j.at("train_seconds").get<double>();
    r.cluster_seconds = j.at("cluster_seconds").get<double>();
    r.sv_count = j.at("sv_count").get<std::size_t>();
    r.converged = j.at("converged").get<bool>();
    r.eval = eval_from_json(j.at("eval"));
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad bench report line: ") + e.what());
  }
}

ReportFile parse_report_lines(const std::string& text, const std::string& name) {
  ReportFile out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string type = j.value("type", "");
      if (type == "eval") {
        out.evals.push_back(eval_report_from_json(line));
      } else if (type == "bench") {
        out.benches.push_back(bench_report_from_json(line));
      } else {
        throw ParseError("unknown report type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError(name + ": line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(name + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_bench_table(const std::vector<BenchReport>& rows) {
  std::string out = pad("method", 10) + pad("T_s", 12) + pad("sv_count", 10) +
                    pad("accuracy_agg", 14) + pad("accuracy_mod", 14) + "converged\n";
  for (const BenchReport& r : rows) {
    out += pad(method_name(r.method), 10) + pad(fixed(r.train_seconds, 3), 12) +
           pad(std::to_string(r.sv_count), 10) + pad(fixed(r.eval.accuracy_agg, 4), 14) +
           pad(fixed(r.eval.accuracy_mod, 4), 14) + (r.converged ? "yes" : "no") + "\n";
  }
  return out;
}

std::string format_eval_table(const std::vector<EvalReport>& rows) {
  std::string out = pad("mode", 9) + pad("accuracy_agg", 14) + pad("accuracy_mod", 14) +
                    pad("correct_agg", 13) + pad("total_agg", 11) + pad("correct_mod", 13) +
                    "total_mod\n";
  for (const EvalReport& r : rows) {
    out += pad(r.mode == EvalMode::offline ? "offline" : "online", 9) +
           pad(fixed(r.accuracy_agg, 4), 14) + pad(fixed(r.accuracy_mod, 4), 14) +
           pad(std::to_string(r.correct_agg), 13) + pad(std::to_string(r.total_agg), 11) +
           pad(std::to_string(r.correct_mod), 13) + std::to_string(r.total_mod) + "\n";
  }
  return out;
}

}  // namespace kmcsvm
