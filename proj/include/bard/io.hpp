#pragma once

#include <map>
#include <string>
#include <vector>

#include "bard/data.hpp"
#include "bard/evaluate.hpp"
#include "bard/filter.hpp"
#include "bard/hyperfit.hpp"
#include "bard/posterior.hpp"
#include "bard/simulate.hpp"

namespace bard::io {

// "# key: value" lines at the top of CSV outputs.
using Metadata = std::vector<std::pair<std::string, std::string>>;

// Numeric CSV, one row per time point, one column per dimension. Lines starting
// with '#' and blank lines are skipped; the first remaining row is treated as a
// header if any of its fields is not a number. Throws InputError with row and
// column on ragged rows, non-numeric or non-finite fields.
DataMatrix read_data_csv(const std::string& path);
void write_data_csv(const std::string& path, const DataMatrix& data, const Metadata& meta = {});

// Metadata lines of a CSV file as a key -> value map.
std::map<std::string, std::string> read_metadata(const std::string& path);

// FNV-1a over the exact bit patterns of the values plus the shape; identifies a
// data set independently of its textual formatting.
std::string data_hash(const DataMatrix& data);

// t,marginal_abnormal,call
void write_marginals_csv(const std::string& path, const PosteriorSummary& summary, const PointEstimate& calls,
                         const Metadata& meta = {});
PosteriorSummary read_marginals_csv(const std::string& path);

// start,end of reported abnormal segments
void write_segments_csv(const std::string& path, const IntervalSet& segments, const Metadata& meta = {});
IntervalSet read_segments_csv(const std::string& path);

// start,end,type for full sampled segmentations, one block per sample
void write_samples_csv(const std::string& path, const std::vector<Segmentation>& samples, const Metadata& meta = {});

struct TruthFile {
  Truth truth;
  std::string data_hash;
  std::string manifest;
};
void write_truth_json(const std::string& path, const TruthFile& truth);
TruthFile read_truth_json(const std::string& path);

void write_report_json(const std::string& path, const EvalReport& report, double consistency_score,
                       const Metadata& meta);
void write_calibration_csv(const std::string& path, const std::vector<CalibrationBin>& bins, const Metadata& meta = {});
void write_d_values_csv(const std::string& path, const IntervalSet& truth, const std::vector<double>& d_values,
                        const Metadata& meta = {});

void write_mcem_trace_csv(const std::string& path, const std::vector<McemIteration>& trace, const Metadata& meta = {});

// Binary filter history cache. Layout (little-endian):
//   magic "BARDFLT\0", u32 version, u32 reserved, 16-byte config hash,
//   16-byte data hash, f64 log evidence, u64 n, u64 particle count,
//   u64 offsets[n + 1],
//   then per particle: i32 c, u8 type, 3 padding bytes, f64 log_prob.
struct FilterCache {
  std::string config_hash;
  std::string data_hash;
  double log_evidence = 0.0;
  FilterHistory history;
};
inline constexpr std::uint32_t kFilterCacheVersion = 1;
void write_filter_cache(const std::string& path, const FilterCache& cache);
FilterCache read_filter_cache(const std::string& path);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace bard::io
