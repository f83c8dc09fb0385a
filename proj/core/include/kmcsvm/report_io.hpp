#pragma once

#include <string>
#include <vector>

#include "kmcsvm/pipeline.hpp"

namespace kmcsvm {

// Reports serialize to JSON-lines: one object per line, stable field
// names (type, mode, accuracy_agg, accuracy_mod, correct_agg, total_agg,
// correct_mod, total_mod; bench lines add method, train_seconds,
// cluster_seconds, sv_count, converged, eval). Documented in the README.

std::string to_json_line(const EvalReport& report);
std::string to_json_line(const BenchReport& report);

EvalReport eval_report_from_json(const std::string& line);
BenchReport bench_report_from_json(const std::string& line);

/// Parses a whole JSON-lines report file; eval and bench lines may mix.
struct ReportFile {
  std::vector<EvalReport> evals;
  std::vector<BenchReport> benches;
};
ReportFile parse_report_lines(const std::string& text, const std::string& name);

/// Aligned text table over bench rows (method, T_s, sv_count,
/// accuracy_agg, accuracy_mod), one row per report.
std::string format_bench_table(const std::vector<BenchReport>& rows);

std::string format_eval_table(const std::vector<EvalReport>& rows);

}  // namespace kmcsvm
