#include "bard/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "bard/config.hpp"
#include "bard/error.hpp"
#include "json.hpp"

namespace bard::io {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(const std::string& field, double& out) {
  if (field.empty()) return false;
  const char* first = field.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), out);
  return ec == std::errc{} && ptr == field.data() + field.size();
}

bool parse_long(const std::string& field, long& out) {
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return !field.empty() && ec == std::errc{} && ptr == field.data() + field.size();
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw InputError("cannot write " + path);
  return out;
}

void write_meta(std::ostream& out, const Metadata& meta) {
  for (const auto& [k, v] : meta) out << "# " << k << ": " << v << '\n';
}

std::string fmt(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

// Rows of a CSV file with comments and blank lines removed; line numbers kept
// for error messages.
struct CsvRows {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;
};

CsvRows read_rows(const std::string& path) {
  auto in = open_in(path);
  CsvRows out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.rows.push_back(split(t));
    out.lines.push_back(number);
  }
  return out;
}

bool is_header(const std::vector<std::string>& row) {
  double x;
  for (const auto& f : row)
    if (!parse_double(f, x)) return true;
  return false;
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& path;

  void need(std::size_t n) {
    if (pos + n > buf.size()) throw InputError(path + ": truncated filter cache");
  }
  std::uint64_t u(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += static_cast<std::size_t>(bytes);
    return v;
  }
  double f64() { return std::bit_cast<double>(u(8)); }
  std::string text(std::size_t n) {
    need(n);
    std::string out = buf.substr(pos, n);
    pos += n;
    return out;
  }
};

constexpr char kMagic[8] = {'B', 'A', 'R', 'D', 'F', 'L', 'T', '\0'};

std::string fixed16(const std::string& s) {
  std::string out = s.substr(0, 16);
  out.resize(16, ' ');
  return out;
}

}  // namespace

DataMatrix read_data_csv(const std::string& path) {
  auto csv = read_rows(path);
  std::size_t first = 0;
  if (!csv.rows.empty() && is_header(csv.rows[0])) first = 1;
  if (csv.rows.size() <= first) throw InputError(path + ": no data rows");
  const std::size_t d = csv.rows[first].size();
  std::vector<double> values;
  values.reserve((csv.rows.size() - first) * d);
  for (std::size_t r = first; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string at = path + ": line " + std::to_string(csv.lines[r]);
    if (row.size() != d)
      throw InputError(at + ": expected " + std::to_string(d) + " columns, found " + std::to_string(row.size()));
    for (std::size_t k = 0; k < d; ++k) {
      double x;
      if (row[k].empty()) throw InputError(at + ", column " + std::to_string(k + 1) + ": missing value");
      if (!parse_double(row[k], x) || !std::isfinite(x))
        throw InputError(at + ", column " + std::to_string(k + 1) + ": not a finite number: '" + row[k] + "'");
      values.push_back(x);
    }
  }
  return DataMatrix(csv.rows.size() - first, d, std::move(values));
}

void write_data_csv(const std::string& path, const DataMatrix& data, const Metadata& meta) {
  auto out = open_out(path);
  write_meta(out, meta);
  for (std::size_t k = 0; k < data.d(); ++k) out << (k ? "," : "") << "y" << (k + 1);
  out << '\n';
  for (long t = 1; t <= static_cast<long>(data.n()); ++t) {
    const auto row = data.row(t);
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << fmt(row[k]);
    out << '\n';
  }
  if (!out) throw InputError("failed writing " + path);
}

std::map<std::string, std::string> read_metadata(const std::string& path) {
  auto in = open_in(path);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() != '#') break;
    const auto colon = t.find(':');
    if (colon == std::string::npos) continue;
    out[trim(std::string_view(t).substr(1, colon - 1))] = trim(std::string_view(t).substr(colon + 1));
  }
  return out;
}

std::string data_hash(const DataMatrix& data) {
  std::string bytes;
  put_u64(bytes, data.n());
  put_u64(bytes, data.d());
  for (long t = 1; t <= static_cast<long>(data.n()); ++t)
    for (double x : data.row(t)) put_f64(bytes, x);
  return hash_hex(bytes);
}

void write_marginals_csv(const std::string& path, const PosteriorSummary& summary, const PointEstimate& calls,
                         const Metadata& meta) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "t,marginal_abnormal,call\n";
  for (long t = 1; t <= summary.n(); ++t) {
    const auto i = static_cast<std::size_t>(t);
    out << t << ',' << fmt(summary.marginal_abnormal[i]) << ',' << (calls.abnormal[i] ? 'A' : 'N') << '\n';
  }
}

PosteriorSummary read_marginals_csv(const std::string& path) {
  auto csv = read_rows(path);
  PosteriorSummary s;
  s.marginal_abnormal.push_back(0.0);
  std::size_t first = !csv.rows.empty() && is_header({csv.rows[0][0]}) ? 1 : 0;
  for (std::size_t r = first; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string at = path + ": line " + std::to_string(csv.lines[r]);
    long t;
    double p;
    if (row.size() < 2 || !parse_long(row[0], t) || !parse_double(row[1], p))
      throw InputError(at + ": expected t,marginal_abnormal");
    if (t != static_cast<long>(s.marginal_abnormal.size())) throw InputError(at + ": time index out of sequence");
    if (!(p >= 0.0 && p <= 1.0)) throw InputError(at + ", column 2: probability outside [0, 1]");
    s.marginal_abnormal.push_back(p);
  }
  if (s.marginal_abnormal.size() < 2) throw InputError(path + ": no rows");
  return s;
}

void write_segments_csv(const std::string& path, const IntervalSet& segments, const Metadata& meta) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "start,end\n";
  for (const auto& iv : segments) out << iv.start << ',' << iv.end << '\n';
}

IntervalSet read_segments_csv(const std::string& path) {
  auto csv = read_rows(path);
  IntervalSet out;
  std::size_t first = !csv.rows.empty() && is_header(csv.rows[0]) ? 1 : 0;
  for (std::size_t r = first; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string at = path + ": line " + std::to_string(csv.lines[r]);
    long a, b;
    if (row.size() < 2 || !parse_long(row[0], a) || !parse_long(row[1], b)) throw InputError(at + ": expected start,end");
    if (a < 1 || b < a) throw InputError(at + ": need 1 <= start <= end");
    if (!out.empty() && a <= out.back().end) throw InputError(at + ": segments overlap or are out of order");
    out.push_back({a, b});
  }
  return out;
}

void write_samples_csv(const std::string& path, const std::vector<Segmentation>& samples, const Metadata& meta) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "sample,start,end,type\n";
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (const auto& s : samples[i].segments) out << i << ',' << s.start << ',' << s.end << ',' << to_string(s.type) << '\n';
}

void write_truth_json(const std::string& path, const TruthFile& tf) {
  json segs = json::array();
  for (const auto& ts : tf.truth.segments) {
    json s{{"start", ts.segment.start}, {"end", ts.segment.end}, {"type", std::string(to_string(ts.segment.type))}};
    if (ts.segment.type == SegmentType::Abnormal) {
      s["mu"] = ts.mu;
      std::vector<std::size_t> dims;
      for (std::size_t k : ts.affected) dims.push_back(k + 1);
      s["affected"] = dims;
    }
    segs.push_back(std::move(s));
  }
  const json j{{"format", "bard-truth"},   {"version", 1},           {"n", tf.truth.n},
               {"d", tf.truth.d},          {"data_hash", tf.data_hash}, {"manifest", tf.manifest},
               {"segments", std::move(segs)}};
  write_text(path, j.dump(2) + "\n");
}

TruthFile read_truth_json(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw InputError(path + ": not valid JSON: " + e.what());
  }
  try {
    if (j.value("format", std::string{}) != "bard-truth") throw InputError(path + ": not a truth file");
    if (j.value("version", 0) != 1) throw InputError(path + ": unsupported truth file version");
    TruthFile tf;
    tf.truth.n = j.at("n").get<long>();
    tf.truth.d = j.at("d").get<std::size_t>();
    tf.data_hash = j.value("data_hash", std::string{});
    tf.manifest = j.value("manifest", std::string{});
    for (const auto& s : j.at("segments")) {
      TruthSegment ts;
      const auto type = s.at("type").get<std::string>();
      if (type != "N" && type != "A") throw InputError(path + ": segment type must be N or A");
      ts.segment = {s.at("start").get<long>(), s.at("end").get<long>(),
                    type == "A" ? SegmentType::Abnormal : SegmentType::Normal};
      ts.mu = s.value("mu", 0.0);
      for (const auto& k : s.value("affected", json::array())) ts.affected.push_back(k.get<std::size_t>() - 1);
      tf.truth.segments.push_back(std::move(ts));
    }
    if (!tf.truth.segmentation().valid(tf.truth.n)) throw InputError(path + ": segments do not tile 1..n");
    return tf;
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_report_json(const std::string& path, const EvalReport& report, double consistency_score,
                       const Metadata& meta) {
  json cal = json::array();
  for (const auto& b : report.calibration)
    cal.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"abnormal", b.abnormal},
                   {"fraction", b.count ? json(b.fraction()) : json(nullptr)}});
  const double mean_d = report.mean_d_detected();
  json j{{"true_segments", report.true_segments},
         {"estimated_segments", report.estimated_segments},
         {"detected", report.detected},
         {"false_positives", report.false_positives},
         {"detection_proportion", report.true_segments ? json(report.detection_proportion()) : json(nullptr)},
         {"mean_d_detected", std::isnan(mean_d) ? json(nullptr) : json(mean_d)},
         {"d_values", report.d_values},
         {"consistency", consistency_score},
         {"consistency_definition",
          "0.5 * (mean over true segments of D against estimates + mean over estimates of D against truth)"},
         {"calibration", cal}};
  json m = json::object();
  for (const auto& [k, v] : meta) m[k] = v;
  j["metadata"] = m;
  write_text(path, j.dump(2) + "\n");
}

void write_calibration_csv(const std::string& path, const std::vector<CalibrationBin>& bins, const Metadata& meta) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "lo,hi,count,abnormal,fraction\n";
  for (const auto& b : bins)
    out << fmt(b.lo) << ',' << fmt(b.hi) << ',' << b.count << ',' << b.abnormal << ',' << (b.count ? fmt(b.fraction()) : "")
        << '\n';
}

void write_d_values_csv(const std::string& path, const IntervalSet& truth, const std::vector<double>& d_values,
                        const Metadata& meta) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "start,end,d\n";
  for (std::size_t i = 0; i < truth.size(); ++i) out << truth[i].start << ',' << truth[i].end << ',' << fmt(d_values[i]) << '\n';
}

void write_mcem_trace_csv(const std::string& path, const std::vector<McemIteration>& trace, const Metadata& meta) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "iter,samples,log_evidence,mean_normal,mean_abnormal,pi_n,rel_change,los_normal,los_abnormal\n";
  for (const auto& it : trace)
    out << it.iter << ',' << it.samples << ',' << fmt(it.log_evidence) << ',' << fmt(it.mean_normal) << ','
        << fmt(it.mean_abnormal) << ',' << fmt(it.pi_n) << ',' << fmt(it.rel_change) << ",\"" << it.los_normal
        << "\",\"" << it.los_abnormal << "\"\n";
}

void write_filter_cache(const std::string& path, const FilterCache& cache) {
  std::string buf(kMagic, sizeof kMagic);
  put_u32(buf, kFilterCacheVersion);
  put_u32(buf, 0);
  buf += fixed16(cache.config_hash);
  buf += fixed16(cache.data_hash);
  put_f64(buf, cache.log_evidence);
  const auto& offsets = cache.history.offsets();
  const auto& particles = cache.history.particles();
  put_u64(buf, static_cast<std::uint64_t>(cache.history.n()));
  put_u64(buf, particles.size());
  for (std::size_t o : offsets) put_u64(buf, o);
  for (const auto& p : particles) {
    put_u32(buf, static_cast<std::uint32_t>(p.c));
    buf.push_back(static_cast<char>(p.b));
    buf.append(3, '\0');
    put_f64(buf, p.log_prob);
  }
  auto out = open_out(path, true);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw InputError("failed writing " + path);
}

FilterCache read_filter_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();
  Reader r{buf, 0, path};
  if (r.text(8) != std::string(kMagic, sizeof kMagic)) throw InputError(path + ": not a filter cache");
  const auto version = r.u(4);
  if (version != kFilterCacheVersion)
    throw InputError(path + ": filter cache version " + std::to_string(version) + " is not supported");
  r.u(4);
  FilterCache cache;
  cache.config_hash = trim(r.text(16));
  cache.data_hash = trim(r.text(16));
  cache.log_evidence = r.f64();
  const auto n = r.u(8);
  const auto count = r.u(8);
  if (n > buf.size() || count > buf.size()) throw InputError(path + ": corrupt filter cache header");
  std::vector<std::size_t> offsets(n + 1);
  for (auto& o : offsets) o = r.u(8);
  std::vector<StoredParticle> particles(count);
  for (auto& p : particles) {
    p.c = static_cast<std::int32_t>(static_cast<std::uint32_t>(r.u(4)));
    const auto b = r.u(1);
    if (b > 1) throw InputError(path + ": corrupt segment type");
    p.b = static_cast<SegmentType>(b);
    r.u(3);
    p.log_prob = r.f64();
  }
  if (r.pos != buf.size()) throw InputError(path + ": trailing bytes in filter cache");
  cache.history = FilterHistory::from_raw(std::move(offsets), std::move(particles));
  return cache;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw InputError("failed writing " + path);
}

std::string read_text(const std::string& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace bard::io
