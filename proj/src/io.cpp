#include "tuplearn/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "tuplearn/errors.hpp"
#include "tuplearn/formula_io.hpp"

namespace tuplearn {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) return out;
    start = tab + 1;
  }
}

// Calls fn(line_number, line) for every non-blank, non-comment line.
template <typename Fn>
void for_each_line(std::string_view text, Fn fn) {
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    const bool blank = line.find_first_not_of(" \t") == std::string_view::npos;
    if (!blank && line.front() != '#' && line.front() != '%') fn(line_no, line);
    start = end + 1;
  }
}

double parse_number(std::string_view s, std::size_t line, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(std::string(what) + ": '" + std::string(s) + "' is not a number", line);
  }
  return v;
}

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void check_field(const std::string& s) {
  if (s.find_first_of("\t\n\r") != std::string::npos) {
    throw InvalidArgumentError("constant '" + s + "' contains a tab or newline and cannot be written as TSV");
  }
}

}  // namespace

ProbabilisticDatabase parse_tuples(std::string_view text) {
  ProbabilisticDatabase db;
  for_each_line(text, [&](std::size_t line, std::string_view row) {
    const auto fields = split_tabs(row);
    if (fields.size() < 2) throw ParseError("tuples: expected relation, arguments and probability", line);
    if (fields.front().empty()) throw ParseError("tuples: empty relation name", line);
    std::vector<std::string> args;
    for (std::size_t i = 1; i + 1 < fields.size(); ++i) args.emplace_back(fields[i]);
    std::optional<double> p;
    if (fields.back() != "?") {
      p = parse_number(fields.back(), line, "tuples");
      if (!(*p >= 0.0 && *p <= 1.0)) throw ParseError("tuples: probability outside [0,1]", line);
    }
    try {
      db.add_tuple(std::string(fields.front()), std::move(args), p);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(std::string("tuples: ") + e.what(), line);
    }
  });
  return db;
}

std::string format_tuples(const ProbabilisticDatabase& db) {
  std::string out;
  for (VarId v = 0; v < db.size(); ++v) {
    const TupleId& id = db.tuple(v);
    check_field(id.relation);
    out += id.relation;
    for (const std::string& a : id.args) {
      check_field(a);
      out += '\t';
      out += a;
    }
    const std::optional<double> p = db.probability(v);
    out += '\t';
    out += p ? format_number(*p) : "?";
    out += '\n';
  }
  return out;
}

std::vector<Label> parse_labels(std::string_view text, const ProbabilisticDatabase& db,
                                const std::vector<DerivedTuple>& derived) {
  std::map<TupleId, const Formula*> lineage;
  for (const DerivedTuple& d : derived) lineage.emplace(d.tuple, &d.lineage);

  std::vector<Label> out;
  for_each_line(text, [&](std::size_t line, std::string_view row) {
    const auto fields = split_tabs(row);
    if (fields.size() != 3 && fields.size() != 4) {
      throw ParseError("labels: expected kind, reference and target", line);
    }
    Label label;
    label.target = parse_number(fields[2], line, "labels");
    if (!(label.target >= 0.0 && label.target <= 1.0)) throw ParseError("labels: target outside [0,1]", line);
    if (fields.size() == 4) {
      label.weight = parse_number(fields[3], line, "labels");
      if (!(*label.weight >= 0.0)) throw ParseError("labels: negative weight", line);
    }
    try {
      if (fields[0] == "Q") {
        const TupleId id = parse_tuple_id(fields[1]);
        if (auto it = lineage.find(id); it != lineage.end()) {
          label.formula = *it->second;
        } else if (auto v = db.find(id)) {
          label.formula = Formula::var(*v);
        } else {
          throw DanglingReferenceError("labels: line " + std::to_string(line) + ": no tuple " + tuple_text(id));
        }
      } else if (fields[0] == "F") {
        label.formula = parse_formula(fields[1], &db);
      } else {
        throw ParseError("labels: kind must be Q or F", line);
      }
    } catch (const ParseError& e) {
      if (e.line() == line) throw;
      throw ParseError(std::string("labels: ") + e.what(), line);
    } catch (const DanglingReferenceError& e) {
      if (fields[0] == "Q") throw;
      throw DanglingReferenceError("labels: line " + std::to_string(line) + ": " + e.what());
    }
    out.push_back(std::move(label));
  });
  return out;
}

std::string format_labels(const std::vector<Label>& labels, const ProbabilisticDatabase& db) {
  std::string out;
  for (const Label& l : labels) {
    out += "F\t" + to_string(l.formula, &db) + "\t" + format_number(l.target);
    if (l.weight) out += "\t" + format_number(*l.weight);
    out += '\n';
  }
  return out;
}

std::string format_learned(const ProbabilisticDatabase& db, const ProbabilityVector& p,
                           const std::vector<VarId>& tuples) {
  std::string out;
  for (VarId v : tuples) {
    const TupleId& id = db.tuple(v);
    out += id.relation;
    for (const std::string& a : id.args) out += "\t" + a;
    out += "\t" + format_number(p[v]) + "\n";
  }
  return out;
}

std::string format_trace(const std::vector<TracePoint>& trace) {
  std::ostringstream os;
  os << "outer_iter,objective,elapsed_ms\n";
  for (const TracePoint& t : trace) os << t.outer_iter << ',' << format_number(t.objective) << ',' << t.elapsed_ms << '\n';
  return os.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

Instance load_instance(const InstanceFiles& files) {
  Instance inst;
  inst.db = parse_tuples(read_file(files.tuples));
  if (!files.rules.empty()) {
    inst.program = parse_program(read_file(files.rules));
    inst.derived = ground(inst.program, inst.db);
  }
  if (!files.labels.empty()) inst.labels = parse_labels(read_file(files.labels), inst.db, inst.derived);
  return inst;
}

}  // namespace tuplearn
