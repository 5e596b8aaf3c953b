#include "freqsamp/csv.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "freqsamp/config.hpp"

namespace freqsamp::csv {

namespace {

[[noreturn]] void schema(const std::string& path, std::size_t row,
                         const std::string& what) {
  throw Error(ErrorKind::kSchemaMismatch,
              path + ": row " + std::to_string(row) + ": " + what);
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

struct Table {
  std::vector<std::string> comments;  // without the leading '#'
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based file line of each row, for diagnostics.
  std::vector<std::size_t> lines;
};

Table read_table(const std::string& path, const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.substr(1));
      continue;
    }
    if (!have_header) {
      if (line != expected_header) {
        schema(path, lineno, "expected header '" + expected_header + "', got '" + line + "'");
      }
      t.header = split(line);
      have_header = true;
      continue;
    }
    auto fields = split(line);
    if (fields.size() != t.header.size()) {
      schema(path, lineno, "expected " + std::to_string(t.header.size()) +
                               " columns, got " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(lineno);
  }
  if (!have_header) schema(path, lineno, "missing header '" + expected_header + "'");
  return t;
}

std::string header_block(const WriteOptions& opts) {
  std::string out;
  if (opts.timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    out += std::string("# generated=") + buf + "\n";
  }
  for (const auto& m : opts.metadata) out += "# " + m + "\n";
  return out;
}

std::string metadata_value(const Table& t, const std::string& key) {
  const std::string prefix = " " + key + "=";
  for (const auto& c : t.comments) {
    if (c.rfind(prefix, 0) == 0) return c.substr(prefix.size());
  }
  return {};
}

std::string label_field(Label l) { return std::string(to_string(l)); }

Label parse_label(const std::string& s, const std::string& path, std::size_t row) {
  if (s == "0") return Label::kStable;
  if (s == "1") return Label::kUnstable;
  if (s == "invalid") return Label::kInvalid;
  schema(path, row, "column label: expected 0|1|invalid, got '" + s + "'");
}

bool parse_flag(const std::string& s, const std::string& path, std::size_t row,
                const char* column) {
  if (s == "0") return false;
  if (s == "1") return true;
  schema(path, row, std::string("column ") + column + ": expected 0|1, got '" + s + "'");
}

long parse_int(const std::string& s, const std::string& path, std::size_t row,
               const char* column) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    schema(path, row, std::string("column ") + column + ": expected integer, got '" + s + "'");
  }
  return v;
}

Gains4d parse_gains(const std::vector<std::string>& f, std::size_t offset,
                    std::size_t row, const std::vector<std::string>& header) {
  Gains4d g;
  for (int i = 0; i < 4; ++i) g(i) = parse_double(f[offset + i], row, header[offset + i]);
  return g;
}

void append_gains(std::string& out, const Gains4d& g) {
  for (int i = 0; i < 4; ++i) out += format_double(g(i)) + ",";
}

std::string report_fields(const std::optional<StabilityReport>& rep) {
  if (!rep) return "nan,nan,nan,nan,nan";
  return format_double(rep->rocof_hz_s) + "," + format_double(rep->nadir_hz) +
         "," + format_double(rep->ss_hz) + "," +
         format_double(rep->critical.t_rocof) + "," +
         format_double(rep->critical.t_nadir);
}

std::optional<ErrorKind> parse_error_kind(const std::string& s) {
  for (int k = 0; k <= static_cast<int>(ErrorKind::kIo); ++k) {
    if (to_string(static_cast<ErrorKind>(k)) == s) return static_cast<ErrorKind>(k);
  }
  return std::nullopt;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& field, std::size_t row,
                    const std::string& column) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw Error(ErrorKind::kSchemaMismatch,
                "row " + std::to_string(row) + ", column " + column +
                    ": not a number: '" + field + "'");
  }
  return v;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::kIo, "cannot move output into '" + path + "'");
  }
}

std::vector<Gains4d> read_thetas(const std::string& path) {
  const Table t = read_table(path, kThetaHeader);
  std::vector<Gains4d> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    try {
      out.push_back(parse_gains(t.rows[r], 0, t.lines[r], t.header));
    } catch (const Error& e) {
      throw Error(ErrorKind::kSchemaMismatch, path + ": " + e.what());
    }
  }
  return out;
}

void write_thetas(const std::string& path, const std::vector<Gains4d>& thetas,
                  const WriteOptions& opts) {
  std::string out = header_block(opts) + kThetaHeader + "\n";
  for (const auto& g : thetas) {
    std::string line;
    append_gains(line, g);
    line.pop_back();
    out += line + "\n";
  }
  write_atomic(path, out);
}

void write_labeled(const std::string& path, const std::vector<Gains4d>& thetas,
                   const std::vector<LabeledSample>& labels,
                   const WriteOptions& opts) {
  if (thetas.size() != labels.size()) {
    throw Error(ErrorKind::kInvalidArgument, "thetas and labels differ in length");
  }
  std::string out = header_block(opts) + kDatasetHeader + "\n";
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    append_gains(out, thetas[i]);
    out += label_field(labels[i].label) + "," + report_fields(labels[i].report) + ",0,0\n";
  }
  write_atomic(path, out);
}

std::string pairs_path(const std::string& dataset_path) {
  return dataset_path + ".pairs.csv";
}

namespace {
const char* kPairsHeader =
    "index,K11_0,K12_0,K21_0,K22_0,label_0,K11_prev,K12_prev,K21_prev,"
    "K22_prev,direction,error_kind,error_message";
}  // namespace

void write_dataset(const std::string& path, const Dataset& data,
                   const WriteOptions& opts) {
  RunConfig rc;
  rc.system = data.metadata.params;
  rc.scheme = data.metadata.config.scheme;
  rc.sampler = data.metadata.config;
  WriteOptions o = opts;
  o.metadata.push_back("params_hash=" + data.metadata.params_hash);
  o.metadata.push_back("seed=" + std::to_string(data.metadata.seed));
  o.metadata.push_back("config=" + nlohmann::json::parse(serialize_config(rc)).dump());

  std::string main = header_block(o) + kDatasetHeader + "\n";
  std::string pairs = header_block(opts) + kPairsHeader + "\n";
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    append_gains(main, r.theta_final);
    main += label_field(r.label_final) + "," + report_fields(r.report_final) +
            "," + (r.converged ? "1" : "0") + "," + std::to_string(r.iterations) + "\n";

    pairs += std::to_string(i) + ",";
    append_gains(pairs, r.theta_initial);
    pairs += label_field(r.label_initial) + ",";
    append_gains(pairs, r.theta_previous);
    pairs += std::string(to_string(r.direction)) + ",";
    if (r.error) {
      pairs += std::string(to_string(r.error->kind)) + "," + quote(r.error->message);
    } else {
      pairs += ",";
    }
    pairs += "\n";
  }
  write_atomic(pairs_path(path), pairs);
  write_atomic(path, main);
}

Dataset read_dataset(const std::string& path) {
  const Table t = read_table(path, kDatasetHeader);
  Dataset data;
  const std::string config = metadata_value(t, "config");
  if (config.empty()) {
    throw Error(ErrorKind::kSchemaMismatch, path + ": missing '# config=' metadata");
  }
  const RunConfig rc = parse_config(config);
  data.metadata.params = rc.system;
  data.metadata.config = rc.sampler;
  data.metadata.params_hash = metadata_value(t, "params_hash");
  data.metadata.seed = std::strtoull(metadata_value(t, "seed").c_str(), nullptr, 10);
  const SystemParams& p = data.metadata.params;
  const long steps = p.steps();

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::size_t row = t.lines[r];
    SampleRecord rec;
    try {
      rec.theta_final = parse_gains(f, 0, row, t.header);
      rec.label_final = parse_label(f[4], path, row);
      if (rec.label_final != Label::kInvalid) {
        StabilityReport rep;
        rep.rocof_hz_s = parse_double(f[5], row, t.header[5]);
        rep.nadir_hz = parse_double(f[6], row, t.header[6]);
        rep.ss_hz = parse_double(f[7], row, t.header[7]);
        rep.critical.t_rocof = parse_double(f[8], row, t.header[8]);
        rep.critical.t_nadir = parse_double(f[9], row, t.header[9]);
        rep.critical.i_rocof = std::lround(rep.critical.t_rocof / p.dt);
        rep.critical.i_nadir = std::lround(rep.critical.t_nadir / p.dt);
        rep.critical.i_ss = steps;
        rep.critical.t_ss = static_cast<double>(steps) * p.dt;
        rep.pass_rocof = std::abs(rep.rocof_hz_s) <= p.thresholds.rocof_hz_s;
        rep.pass_nadir = std::abs(rep.nadir_hz) <= p.thresholds.nadir_hz;
        rep.pass_ss = std::abs(rep.ss_hz) <= p.thresholds.ss_hz;
        rep.label = rec.label_final;
        rec.report_final = rep;
      }
    } catch (const Error& e) {
      throw Error(ErrorKind::kSchemaMismatch, path + ": " + e.what());
    }
    rec.converged = parse_flag(f[10], path, row, "converged");
    rec.iterations = static_cast<int>(parse_int(f[11], path, row, "iterations"));
    rec.theta_initial = rec.theta_final;
    rec.theta_previous = rec.theta_final;
    data.records.push_back(rec);
  }

  const std::string companion = pairs_path(path);
  if (!std::filesystem::exists(companion)) return data;
  const Table pt = read_table(companion, kPairsHeader);
  if (pt.rows.size() != data.records.size()) {
    throw Error(ErrorKind::kSchemaMismatch,
                companion + ": row count does not match the dataset");
  }
  for (std::size_t r = 0; r < pt.rows.size(); ++r) {
    const auto& f = pt.rows[r];
    const std::size_t row = pt.lines[r];
    auto& rec = data.records[r];
    if (parse_int(f[0], companion, row, "index") != static_cast<long>(r)) {
      schema(companion, row, "index out of order");
    }
    try {
      rec.theta_initial = parse_gains(f, 1, row, pt.header);
      rec.label_initial = parse_label(f[5], companion, row);
      rec.theta_previous = parse_gains(f, 6, row, pt.header);
    } catch (const Error& e) {
      throw Error(ErrorKind::kSchemaMismatch, companion + ": " + e.what());
    }
    if (f[10] == "stabilize") {
      rec.direction = SearchDirection::kStabilize;
    } else if (f[10] == "destabilize") {
      rec.direction = SearchDirection::kDestabilize;
    } else {
      schema(companion, row, "column direction: got '" + f[10] + "'");
    }
    if (!f[11].empty()) {
      const auto kind = parse_error_kind(f[11]);
      if (!kind) schema(companion, row, "column error_kind: got '" + f[11] + "'");
      rec.error = ErrorRecord{*kind, f[12]};
    }
  }
  return data;
}

void write_trajectory(const std::string& path, const Trajectoryd& traj,
                      bool with_tangents, const WriteOptions& opts) {
  if (with_tangents && !traj.has_tangents()) {
    throw Error(ErrorKind::kMissingTangents, "trajectory has no tangents to export");
  }
  std::string out = header_block(opts) + "t,omega_pu,omegadot_pu";
  if (with_tangents) out += ",s11,s21,s12,s22,s13,s23,s14,s24";
  out += "\n";
  out.reserve(out.size() + traj.size() * (with_tangents ? 260 : 75));
  for (std::size_t n = 0; n < traj.size(); ++n) {
    out += format_double(traj.times[n]) + "," + format_double(traj.states[n](0)) +
           "," + format_double(traj.states[n](1));
    if (with_tangents) {
      for (int i = 0; i < 4; ++i) {
        for (int r = 0; r < 2; ++r) out += "," + format_double(traj.tangents[n](r, i));
      }
    }
    out += "\n";
  }
  write_atomic(path, out);
}

Trajectoryd read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  std::string line;
  bool tangents = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') {
      tangents = line.find("s11") != std::string::npos;
      break;
    }
  }
  const std::string header = tangents
      ? "t,omega_pu,omegadot_pu,s11,s21,s12,s22,s13,s23,s14,s24"
      : "t,omega_pu,omegadot_pu";
  const Table t = read_table(path, header);
  Trajectoryd traj;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    try {
      traj.times.push_back(parse_double(f[0], t.lines[r], t.header[0]));
      traj.states.emplace_back(parse_double(f[1], t.lines[r], t.header[1]),
                               parse_double(f[2], t.lines[r], t.header[2]));
      if (tangents) {
        Tangent24d s;
        for (int i = 0; i < 4; ++i) {
          for (int row = 0; row < 2; ++row) {
            const std::size_t c = 3 + 2 * i + row;
            s(row, i) = parse_double(f[c], t.lines[r], t.header[c]);
          }
        }
        traj.tangents.push_back(s);
      }
    } catch (const Error& e) {
      throw Error(ErrorKind::kSchemaMismatch, path + ": " + e.what());
    }
  }
  if (traj.size() >= 2) traj.dt = traj.times[1] - traj.times[0];
  return traj;
}

void write_bench(const std::string& path, const ComparisonReport& report,
                 const WriteOptions& opts) {
  WriteOptions o = opts;
  o.metadata.push_back("reference=" + report.reference);
  o.metadata.push_back("samples_used=" + std::to_string(report.samples_used));
  o.metadata.push_back("samples_skipped=" + std::to_string(report.samples_skipped));
  o.metadata.push_back("ss_gradient_ratio=" + format_double(report.ss_gradient_ratio));
  for (const auto& row : report.rows) {
    o.metadata.push_back("err_g_ss[" + row.method + "]=" + format_double(row.err_g_ss));
  }
  std::string out = header_block(o) + kBenchHeader + "\n";
  for (const auto& row : report.rows) {
    out += quote(row.method) + "," + std::to_string(row.memory_bytes) + "," +
           format_double(row.time_s) + "," + format_double(row.err_x_tss) + "," +
           format_double(row.err_x_tnadir) + "," + format_double(row.err_x_trocof) +
           "," + format_double(row.err_g_nadir) + "," +
           format_double(row.err_g_rocof) + "\n";
  }
  write_atomic(path, out);
}

void write_gradients(const std::string& path,
                     const std::vector<GradientRow>& rows,
                     const WriteOptions& opts) {
  std::string out = header_block(opts) + "criterion,method,dK11,dK12,dK21,dK22,err_pct\n";
  for (const auto& r : rows) {
    out += r.criterion + "," + quote(r.method) + ",";
    append_gains(out, r.gradient);
    out += format_double(r.err_pct) + "\n";
  }
  write_atomic(path, out);
}

}  // namespace freqsamp::csv
