#include <fmt/format.h>

#include <array>
#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "toolmotion/acquisition.hpp"
#include "toolmotion/error.hpp"

namespace toolmotion {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 8> kPoseColumns = {"t", "px", "py", "pz", "qw", "qx", "qy", "qz"};

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(std::string_view field, std::size_t row, std::string_view column) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw Error(ErrorKind::ParseError, fmt::format("row {}: column '{}' is not a number: '{}'", row, column, field));
  }
  return value;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::SchemaError, fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::SchemaError, fmt::format("cannot write {}", path.string()));
  out << content;
}

template <typename T>
T require(const json& j, const char* key, std::string_view context) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorKind::SchemaError, fmt::format("{}: missing key '{}'", context, key));
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("{}: bad value for '{}': {}", context, key, e.what()));
  }
}

Interval parse_interval(const json& j, std::string_view context) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorKind::ParseError, fmt::format("{}: interval must be [t_start, t_end]", context));
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Vec3 parse_vec3(const json& j, std::string_view context) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorKind::ParseError, fmt::format("{}: expected [x, y, z]", context));
  }
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorKind::ParseError, fmt::format("{}: non-numeric component", context));
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json to_json(const Interval& i) { return json::array({i.t_start, i.t_end}); }

}  // namespace

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error(ErrorKind::NumericFailure, "number formatting failed");
  return std::string(buf.data(), ptr);
}

PoseStream read_pose_csv(const fs::path& path, double nominal_rate) {
  const std::string text = read_file(path);
  PoseStream stream;
  stream.nominal_rate = nominal_rate;

  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::SchemaError, fmt::format("{}: empty file", path.string()));
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string_view> header = split(line, ',');
  std::array<std::size_t, 8> index{};
  for (std::size_t c = 0; c < kPoseColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), kPoseColumns[c]);
    if (it == header.end()) {
      throw Error(ErrorKind::SchemaError, fmt::format("{}: missing column '{}'", path.string(), kPoseColumns[c]));
    }
    index[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string_view> fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::ParseError, fmt::format("{}: row {} has {} fields, expected {}", path.string(), row,
                                                     fields.size(), header.size()));
    }
    std::array<double, 8> v{};
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = parse_double(fields[index[c]], row, kPoseColumns[c]);
    PoseSample s;
    s.t = v[0];
    s.pose.translation = {v[1], v[2], v[3]};
    try {
      s.pose.rotation = UnitQuaternion(v[4], v[5], v[6], v[7]);
    } catch (const Error&) {
      throw Error(ErrorKind::ParseError, fmt::format("{}: row {} has a zero quaternion", path.string(), row));
    }
    if (!stream.samples.empty() && !(s.t > stream.samples.back().t)) {
      throw Error(ErrorKind::OrderError,
                  fmt::format("{}: timestamp not strictly increasing at row {}", path.string(), row));
    }
    stream.samples.push_back(s);
    ++row;
  }
  return stream;
}

std::string format_pose_csv(const PoseStream& stream) {
  std::string out = "t,px,py,pz,qw,qx,qy,qz\n";
  for (const PoseSample& s : stream.samples) {
    const auto& q = s.pose.rotation;
    const auto& p = s.pose.translation;
    out += fmt::format("{},{},{},{},{},{},{},{}\n", format_number(s.t), format_number(p.x), format_number(p.y),
                       format_number(p.z), format_number(q.w()), format_number(q.x()), format_number(q.y()),
                       format_number(q.z()));
  }
  return out;
}

void write_pose_csv(const PoseStream& stream, const fs::path& path) { write_file(path, format_pose_csv(stream)); }

Trial parse_trial(const fs::path& bundle_dir) {
  const fs::path meta_path = bundle_dir / "meta.json";
  if (!fs::exists(meta_path)) throw Error(ErrorKind::SchemaError, fmt::format("{}: missing meta.json", bundle_dir.string()));
  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, fmt::format("{}: {}", meta_path.string(), e.what()));
  }
  const std::string ctx = meta_path.string();

  Trial trial;
  trial.id = require<std::string>(meta, "id", ctx);
  const double rate = require<double>(meta, "nominal_rate", ctx);
  if (!(rate > 0.0)) throw Error(ErrorKind::ParseError, fmt::format("{}: nominal_rate must be > 0", ctx));

  if (!meta.contains("registration_interval")) {
    throw Error(ErrorKind::SchemaError, fmt::format("{}: missing key 'registration_interval'", ctx));
  }
  trial.registration_interval = parse_interval(meta["registration_interval"], ctx);
  if (meta.contains("registration_tip")) trial.registration_tip = parse_tip(meta["registration_tip"].get<std::string>());

  if (meta.contains("calibrations")) {
    const json& cals = meta["calibrations"];
    for (const Tip tip : {Tip::A, Tip::B}) {
      const std::string key(to_string(tip));
      if (!cals.contains(key) || !cals[key].contains("offset")) continue;
      TipCalibration cal;
      cal.tip_offset = parse_vec3(cals[key]["offset"], ctx + " calibrations." + key);
      cal.residual_rms = cals[key].value("residual_rms", 0.0);
      (tip == Tip::A ? trial.tip_a : trial.tip_b) = cal;
    }
  }
  if (meta.contains("pivot_intervals")) {
    const json& piv = meta["pivot_intervals"];
    if (piv.contains("tip_a")) trial.pivot_a = parse_interval(piv["tip_a"], ctx + " pivot_intervals.tip_a");
    if (piv.contains("tip_b")) trial.pivot_b = parse_interval(piv["tip_b"], ctx + " pivot_intervals.tip_b");
  }
  if (meta.contains("head_axis")) {
    const json& ax = meta["head_axis"];
    trial.head_axis = AxisOverride{parse_vec3(require<json>(ax, "point", ctx), ctx + " head_axis.point"),
                                   parse_vec3(require<json>(ax, "direction", ctx), ctx + " head_axis.direction")};
  }

  if (!meta.contains("annotations") || !meta["annotations"].is_array()) {
    throw Error(ErrorKind::SchemaError, fmt::format("{}: missing annotations array", ctx));
  }
  for (const json& a : meta["annotations"]) {
    Annotation ann;
    ann.interval = {require<double>(a, "t_start", ctx), require<double>(a, "t_end", ctx)};
    ann.operator_id = require<std::string>(a, "operator_id", ctx);
    ann.operator_class = parse_skill_class(require<std::string>(a, "operator_class", ctx));
    ann.active_tip = parse_tip(require<std::string>(a, "active_tip", ctx));
    ann.cottle_in_use = require<bool>(a, "cottle_in_use", ctx);
    trial.annotations.push_back(std::move(ann));
  }

  trial.cottle_stream = read_pose_csv(bundle_dir / "cottle.csv", rate);
  if (fs::exists(bundle_dir / "head.csv")) trial.head_stream = read_pose_csv(bundle_dir / "head.csv", rate);

  // every tip that is ever active needs a calibration or a pivot segment
  auto needs = [&](Tip tip) {
    if (trial.registration_tip == tip) return true;
    return std::any_of(trial.annotations.begin(), trial.annotations.end(),
                       [&](const Annotation& a) { return a.cottle_in_use && a.active_tip == tip; });
  };
  for (const Tip tip : {Tip::A, Tip::B}) {
    if (needs(tip) && !trial.calibration(tip) && !trial.pivot_interval(tip)) {
      throw Error(ErrorKind::SchemaError,
                  fmt::format("{}: {} has neither a calibration offset nor a pivot interval", ctx, to_string(tip)));
    }
  }

  validate_trial(trial);
  return trial;
}

void write_trial(const Trial& trial, const fs::path& bundle_dir) {
  fs::create_directories(bundle_dir);
  json meta;
  meta["id"] = trial.id;
  meta["nominal_rate"] = trial.cottle_stream.nominal_rate;
  meta["registration_interval"] = to_json(trial.registration_interval);
  meta["registration_tip"] = std::string(to_string(trial.registration_tip));

  json cals = json::object();
  for (const Tip tip : {Tip::A, Tip::B}) {
    if (const auto& cal = trial.calibration(tip)) {
      cals[std::string(to_string(tip))] = {{"offset", to_json(cal->tip_offset)}, {"residual_rms", cal->residual_rms}};
    }
  }
  meta["calibrations"] = cals;

  json piv = json::object();
  if (trial.pivot_a) piv["tip_a"] = to_json(*trial.pivot_a);
  if (trial.pivot_b) piv["tip_b"] = to_json(*trial.pivot_b);
  if (!piv.empty()) meta["pivot_intervals"] = piv;

  if (trial.head_axis) {
    meta["head_axis"] = {{"point", to_json(trial.head_axis->point)}, {"direction", to_json(trial.head_axis->direction)}};
  }

  json anns = json::array();
  for (const Annotation& a : trial.annotations) {
    anns.push_back({{"t_start", a.interval.t_start},
                    {"t_end", a.interval.t_end},
                    {"operator_id", a.operator_id},
                    {"operator_class", std::string(to_string(a.operator_class))},
                    {"active_tip", std::string(to_string(a.active_tip))},
                    {"cottle_in_use", a.cottle_in_use}});
  }
  meta["annotations"] = anns;

  write_file(bundle_dir / "meta.json", meta.dump(2) + "\n");
  write_pose_csv(trial.cottle_stream, bundle_dir / "cottle.csv");
  if (trial.head_stream) {
    write_pose_csv(*trial.head_stream, bundle_dir / "head.csv");
  } else if (fs::exists(bundle_dir / "head.csv")) {
    fs::remove(bundle_dir / "head.csv");
  }
}

}  // namespace toolmotion
