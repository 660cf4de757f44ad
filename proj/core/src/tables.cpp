#include "toolmotion/tables.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "toolmotion/error.hpp"

namespace toolmotion {

namespace {

std::string num(double v) { return format_number(v); }

void check_id(const std::string& id) {
  if (id.find_first_of(",\n\r\"") != std::string::npos) {
    throw Error(ErrorKind::SchemaError, fmt::format("identifier '{}' cannot be written to CSV", id));
  }
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Header-indexed rows of a CSV document; CR before LF is tolerated.
struct CsvTable {
  std::map<std::string, std::size_t, std::less<>> columns;
  std::vector<std::vector<std::string_view>> rows;

  std::string_view get(std::size_t row, std::string_view column) const {
    const auto it = columns.find(column);
    if (it == columns.end()) throw Error(ErrorKind::SchemaError, fmt::format("missing column '{}'", column));
    return rows[row][it->second];
  }

  double number(std::size_t row, std::string_view column) const {
    const std::string_view f = get(row, column);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
      throw Error(ErrorKind::ParseError, fmt::format("row {}: column '{}' is not a number: '{}'", row + 1, column, f));
    }
    return v;
  }

  long integer(std::size_t row, std::string_view column) const {
    const std::string_view f = get(row, column);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
      throw Error(ErrorKind::ParseError, fmt::format("row {}: column '{}' is not an integer: '{}'", row + 1, column, f));
    }
    return v;
  }
};

CsvTable parse_csv(std::string_view text, std::initializer_list<std::string_view> required) {
  CsvTable table;
  std::size_t pos = 0;
  bool header = true;
  std::size_t width = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (header) {
      for (std::size_t i = 0; i < fields.size(); ++i) table.columns.emplace(std::string(fields[i]), i);
      width = fields.size();
      header = false;
      continue;
    }
    if (fields.size() != width) {
      throw Error(ErrorKind::ParseError, fmt::format("row {}: expected {} fields, got {}", table.rows.size() + 1, width,
                                                     fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (header) throw Error(ErrorKind::SchemaError, "CSV has no header");
  for (std::string_view c : required) {
    if (!table.columns.count(c)) throw Error(ErrorKind::SchemaError, fmt::format("missing column '{}'", c));
  }
  return table;
}

bool parse_bool(std::string_view s, std::size_t row) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw Error(ErrorKind::ParseError, fmt::format("row {}: '{}' is not a boolean", row + 1, s));
}

}  // namespace

std::string features_csv(std::span<const TrialReport> reports) {
  std::ostringstream out;
  out << "trial_id,operator_id,operator_class,scc,sdc,cr,n_strokes,n_subtrials,n_excluded\n";
  for (const TrialReport& r : reports) {
    for (const DatasetRow& row : r.rows) {
      check_id(row.trial_id);
      check_id(row.operator_id);
      std::size_t n_sub = 0;
      std::size_t n_excl = 0;
      for (const SubtrialOutcome& o : r.subtrials) {
        if (o.subtrial.operator_id != row.operator_id) continue;
        ++n_sub;
        if (o.result.excluded()) ++n_excl;
      }
      out << row.trial_id << ',' << row.operator_id << ',' << to_string(row.label) << ',' << num(row.features.scc)
          << ',' << num(row.features.sdc) << ',' << num(row.features.cr) << ',' << row.features.n_strokes << ','
          << n_sub << ',' << n_excl << '\n';
    }
  }
  return out.str();
}

std::string subtrial_features_csv(std::span<const TrialReport> reports) {
  std::ostringstream out;
  out << "trial_id,subtrial,operator_id,operator_class,active_tip,t_start,t_end,n_strokes,excluded,scc,sdc,cr\n";
  for (const TrialReport& r : reports) {
    for (std::size_t i = 0; i < r.subtrials.size(); ++i) {
      const SubTrial& s = r.subtrials[i].subtrial;
      const SubtrialResult& res = r.subtrials[i].result;
      check_id(s.operator_id);
      out << r.trial_id << ',' << i << ',' << s.operator_id << ',' << to_string(s.operator_class) << ','
          << to_string(s.active_tip) << ',' << num(s.interval.t_start) << ',' << num(s.interval.t_end) << ','
          << res.strokes.size() << ',' << (res.excluded() ? 1 : 0);
      if (res.features) {
        out << ',' << num(res.features->scc) << ',' << num(res.features->sdc) << ',' << num(res.features->cr);
      } else {
        out << ",,,";
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string strokes_csv(std::span<const TrialReport> reports) {
  std::ostringstream out;
  out << "trial_id,subtrial,operator_id,operator_class,excluded,stroke,start_idx,end_idx,start_t,end_t,duration,"
         "path_length,chord_length,curvature,start_x,start_y,peak_distance,prominence,hull_increment\n";
  for (const TrialReport& r : reports) {
    for (std::size_t i = 0; i < r.subtrials.size(); ++i) {
      const SubTrial& s = r.subtrials[i].subtrial;
      const SubtrialResult& res = r.subtrials[i].result;
      const std::vector<double> inc = res.graph ? hull_increments(*res.graph) : std::vector<double>{};
      for (std::size_t k = 0; k < res.strokes.size(); ++k) {
        const Stroke& st = res.strokes[k];
        out << r.trial_id << ',' << i << ',' << s.operator_id << ',' << to_string(s.operator_class) << ','
            << (res.excluded() ? 1 : 0) << ',' << k << ',' << st.start_idx << ',' << st.end_idx << ','
            << num(st.start_t) << ',' << num(st.end_t) << ',' << num(st.duration) << ',' << num(st.path_length)
            << ',' << num(st.chord_length) << ',' << num(res.curvatures[k]) << ',' << num(st.start_point_2d.x) << ','
            << num(st.start_point_2d.y) << ',' << num(st.peak_distance) << ',' << num(st.prominence) << ','
            << (inc.empty() ? std::string() : num(inc[k])) << '\n';
      }
    }
  }
  return out.str();
}

Dataset parse_features_csv(std::string_view text) {
  const CsvTable t =
      parse_csv(text, {"trial_id", "operator_id", "operator_class", "scc", "sdc", "cr", "n_strokes"});
  Dataset ds;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    DatasetRow row;
    row.trial_id = std::string(t.get(i, "trial_id"));
    row.operator_id = std::string(t.get(i, "operator_id"));
    row.label = parse_skill_class(t.get(i, "operator_class"));
    row.features.scc = t.number(i, "scc");
    row.features.sdc = t.number(i, "sdc");
    row.features.cr = t.number(i, "cr");
    row.features.n_strokes = static_cast<std::size_t>(t.integer(i, "n_strokes"));
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

std::vector<StrokeRecord> parse_strokes_csv(std::string_view text) {
  const CsvTable t = parse_csv(text, {"trial_id", "subtrial", "operator_id", "operator_class", "excluded", "stroke",
                                      "duration", "path_length", "curvature", "start_x", "start_y", "hull_increment"});
  std::vector<StrokeRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    StrokeRecord s;
    s.trial_id = std::string(t.get(i, "trial_id"));
    s.subtrial = static_cast<int>(t.integer(i, "subtrial"));
    s.operator_id = std::string(t.get(i, "operator_id"));
    s.operator_class = parse_skill_class(t.get(i, "operator_class"));
    s.excluded = parse_bool(t.get(i, "excluded"), i);
    s.stroke = static_cast<int>(t.integer(i, "stroke"));
    s.duration = t.number(i, "duration");
    s.path_length = t.number(i, "path_length");
    s.curvature = t.number(i, "curvature");
    s.start = {t.number(i, "start_x"), t.number(i, "start_y")};
    s.hull_increment = t.get(i, "hull_increment").empty() ? 0.0 : t.number(i, "hull_increment");
    out.push_back(std::move(s));
  }
  return out;
}

void attach_sequences(Dataset& ds, std::span<const StrokeRecord> strokes) {
  std::map<std::pair<std::string, std::string>, std::map<int, ObservationSequence>> grouped;
  for (const StrokeRecord& s : strokes) {
    if (s.excluded) continue;
    grouped[{s.trial_id, s.operator_id}][s.subtrial].push_back({s.curvature, s.duration, s.hull_increment});
  }
  for (DatasetRow& row : ds.rows) {
    row.sequences.clear();
    const auto it = grouped.find({row.trial_id, row.operator_id});
    if (it == grouped.end()) continue;
    for (auto& [index, seq] : it->second) row.sequences.push_back(seq);
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::SchemaError, fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::SchemaError, fmt::format("cannot write {}", path.string()));
    out << text;
    if (!out) throw Error(ErrorKind::SchemaError, fmt::format("short write to {}", path.string()));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace toolmotion
