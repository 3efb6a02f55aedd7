#pragma once

#include <string>
#include <vector>

#include "ticketlab/experiment.hpp"
#include "ticketlab/pruning.hpp"
#include "ticketlab/stats.hpp"

namespace ticketlab::report {

// Overlap CSV: layer,pair,x,pct,baseline_mean,baseline_sigma,significant_95,
// significant_99. Rows are sorted, floats printed with fixed precision, so
// rerunning on the same stats yields identical bytes.
std::string overlap_csv(std::vector<stats::OverlapStat> stats);
void write_overlap_csv(const std::string& path, const std::vector<stats::OverlapStat>& stats);

// Fig-2-style scatter: x = layer, y = percent overlap, one shade per seed,
// gray hypergeometric baseline band.
std::string overlap_svg(std::vector<stats::OverlapStat> stats, const std::string& title);
void write_overlap_svg(const std::string& path, const std::vector<stats::OverlapStat>& stats,
                       const std::string& title);

std::string shared_never_csv(const std::vector<SharedNeverRow>& rows);
void write_shared_never_csv(const std::string& path, const std::vector<SharedNeverRow>& rows);
std::string shared_never_svg(const std::vector<SharedNeverRow>& rows, const std::string& title);

// Accuracy-per-pruning-step curves (one line per run).
std::string accuracy_csv(const std::vector<RunRecord>& records);
std::string accuracy_svg(const std::vector<RunRecord>& records, const std::string& title);

// Rank correlations stored in the records, one row per (seed, run, step, layer).
std::string rank_correlation_csv(const std::vector<RunRecord>& records);

// Pairwise output-similarity matrices over the records' probe outputs plus
// violin-style grouped values (within / across seeds) as JSON.
std::string similarity_csv(const std::vector<RunRecord>& records);
std::string similarity_json(const std::vector<RunRecord>& records);

void write_text(const std::string& path, const std::string& content);

}  // namespace ticketlab::report
