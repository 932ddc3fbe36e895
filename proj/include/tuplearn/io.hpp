#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tuplearn/database.hpp"
#include "tuplearn/datalog.hpp"
#include "tuplearn/learning.hpp"

namespace tuplearn {

// tuples.tsv: one tuple per line, `relation<TAB>arg1 ... argN<TAB>prob`,
// where prob is a number in [0,1] or `?` for a learnable tuple. Lines
// starting with '#' or '%' and blank lines are ignored.
ProbabilisticDatabase parse_tuples(std::string_view text);
std::string format_tuples(const ProbabilisticDatabase& db);

// labels.tsv rows, with an optional trailing weight column:
//   Q<TAB>relation(args)<TAB>target    lineage of a derived (or base) tuple
//   F<TAB>formula<TAB>target           formula in lineage text syntax
std::vector<Label> parse_labels(std::string_view text, const ProbabilisticDatabase& db,
                                const std::vector<DerivedTuple>& derived);
// Writes every label as an F row.
std::string format_labels(const std::vector<Label>& labels, const ProbabilisticDatabase& db);

// `relation<TAB>args...<TAB>prob` for the given tuples.
std::string format_learned(const ProbabilisticDatabase& db, const ProbabilityVector& p,
                           const std::vector<VarId>& tuples);

// `outer_iter,objective,elapsed_ms`.
std::string format_trace(const std::vector<TracePoint>& trace);

struct InstanceFiles {
  std::filesystem::path tuples;
  std::filesystem::path rules;   // optional
  std::filesystem::path labels;  // optional
};

struct Instance {
  ProbabilisticDatabase db;
  DeductionProgram program;
  std::vector<DerivedTuple> derived;
  std::vector<Label> labels;

  LearningProblem problem() const { return LearningProblem::from_database(db, labels); }
};

Instance load_instance(const InstanceFiles& files);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace tuplearn
