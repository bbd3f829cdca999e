#pragma once

#include "fluidrc/analysis.hpp"
#include "fluidrc/labeled_matrix.hpp"
#include "fluidrc/signal.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fluidrc {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
/// Strict parse of a whole field; throws data_error quoting `where`.
double parse_double(const std::string& field, const std::string& where);

// Signal records: CSV with columns frame,D1_R,...,D3_B (one row per frame)
// plus a sidecar <stem>.json holding {class, variant, seed, config_hash}.
void write_signal_csv(std::ostream& out, const signal_record& rec);
/// Throws data_error with the source name and line number on any defect.
signal_record read_signal_csv(std::istream& in, const std::string& source);

std::filesystem::path signal_file_name(const pattern_label& label);
void write_signal_record(const std::filesystem::path& csv, const signal_record& rec);
signal_record read_signal_record(const std::filesystem::path& csv);
void write_signal_dir(const std::filesystem::path& dir, const std::vector<signal_record>& recs);
/// Every *.csv in `dir` with a sidecar, ordered by label.
std::vector<signal_record> read_signal_dir(const std::filesystem::path& dir);

// Quantized records: feature_0..feature_{n-1},class,variant[,synthetic].
void write_quantized_csv(std::ostream& out, const std::vector<quantized_record>& recs,
                         bool with_synthetic_flag);
std::vector<quantized_record> read_quantized_csv(std::istream& in, const std::string& source,
                                                 int intervals);
/// Also writes <path>.json with {intervals, areas}.
void write_quantized_file(const std::filesystem::path& path, const std::vector<quantized_record>& recs,
                          const quantization_config& cfg, bool with_synthetic_flag = false);
/// Reads the interval count from the sidecar when present.
std::vector<quantized_record> read_quantized_file(const std::filesystem::path& path, int intervals = 0);

void write_matrix_csv(std::ostream& out, const labeled_matrix& m);
labeled_matrix read_matrix_csv(std::istream& in, const std::string& source);

void write_heatmap_csv(std::ostream& out, const mi_heatmap& hm);
void write_sweep_csv(std::ostream& out, const sweep_grid& grid);
void write_area_csv(std::ostream& out, const std::vector<area_row>& rows);
void write_sigma_csv(std::ostream& out, const std::vector<sigma_result>& rows);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

} // namespace fluidrc
