#include "fluidrc/record_io.hpp"

#include "fluidrc/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fluidrc {

namespace {

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

std::string strip_cr(std::string s)
{
    if (!s.empty() && s.back() == '\r')
        s.pop_back();
    return s;
}

std::string at_line(const std::string& source, int line)
{
    return source + ":" + std::to_string(line);
}

std::filesystem::path sidecar_of(const std::filesystem::path& p)
{
    auto s = p;
    s.replace_extension(".json");
    return s;
}

} // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& field, const std::string& where)
{
    double v = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw data_error(where + ": bad number '" + field + "'");
    return v;
}

void write_signal_csv(std::ostream& out, const signal_record& rec)
{
    out << "frame";
    for (int s = 0; s < n_series; ++s)
        out << ',' << series_name(s);
    out << '\n';
    for (std::size_t t = 0; t < rec.frames(); ++t) {
        out << t;
        for (int s = 0; s < n_series; ++s)
            out << ',' << format_double(rec.series[s][t]);
        out << '\n';
    }
}

signal_record read_signal_csv(std::istream& in, const std::string& source)
{
    std::string line;
    int lineno = 1;
    if (!std::getline(in, line))
        throw data_error(at_line(source, lineno) + ": missing header row");
    std::string expected = "frame";
    for (int s = 0; s < n_series; ++s)
        expected += "," + series_name(s);
    if (strip_cr(line) != expected)
        throw data_error(at_line(source, lineno) + ": header must be '" + expected + "'");

    signal_record rec;
    for (auto& s : rec.series)
        s.reserve(n_frames);
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty())
            continue;
        const auto fields = split_fields(line);
        const auto where = at_line(source, lineno);
        if (fields.size() != static_cast<std::size_t>(n_series + 1))
            throw data_error(where + ": expected 10 columns, found " + std::to_string(fields.size()));
        const double frame = parse_double(fields[0], where);
        if (frame != static_cast<double>(rec.frames()))
            throw data_error(where + ": frame index " + fields[0] + " out of sequence");
        for (int s = 0; s < n_series; ++s) {
            const double v = parse_double(fields[s + 1], where);
            if (!(v >= 0.0 && v <= 255.0))
                throw data_error(where + ": value " + fields[s + 1] + " outside [0,255]");
            rec.series[s].push_back(v);
        }
    }
    if (rec.frames() != static_cast<std::size_t>(n_frames))
        throw dimension_error(source + ": " + std::to_string(rec.frames()) + " frame rows, expected 1800");
    return rec;
}

std::filesystem::path signal_file_name(const pattern_label& label)
{
    return to_string(label) + ".csv";
}

void write_signal_record(const std::filesystem::path& csv, const signal_record& rec)
{
    std::ostringstream body;
    write_signal_csv(body, rec);
    write_text_file(csv, body.str());
    const nlohmann::json meta{{"class", std::string(to_string(rec.label.cls))},
                              {"variant", rec.label.variant},
                              {"seed", rec.seed},
                              {"config_hash", rec.config_hash}};
    write_text_file(sidecar_of(csv), meta.dump(2) + "\n");
}

signal_record read_signal_record(const std::filesystem::path& csv)
{
    std::ifstream in(csv);
    if (!in)
        throw data_error("cannot open signal file '" + csv.string() + "'");
    auto rec = read_signal_csv(in, csv.filename().string());
    const auto side = sidecar_of(csv);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(side));
        rec.label.cls = parse_class(meta.at("class").get<std::string>());
        rec.label.variant = meta.at("variant").get<int>();
        rec.seed = meta.value("seed", std::uint64_t{0});
        rec.config_hash = meta.value("config_hash", "");
    } catch (const nlohmann::json::exception& e) {
        throw data_error(side.filename().string() + ": " + e.what());
    } catch (const config_error& e) {
        throw data_error(side.filename().string() + ": " + e.what());
    }
    if (rec.label.variant < 1 || rec.label.variant > n_variants)
        throw data_error(side.filename().string() + ": variant out of range");
    return rec;
}

void write_signal_dir(const std::filesystem::path& dir, const std::vector<signal_record>& recs)
{
    std::filesystem::create_directories(dir);
    for (const auto& r : recs)
        write_signal_record(dir / signal_file_name(r.label), r);
}

std::vector<signal_record> read_signal_dir(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
        throw data_error("'" + dir.string() + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".csv" && std::filesystem::exists(sidecar_of(entry.path())))
            files.push_back(entry.path());
    std::vector<signal_record> out;
    for (const auto& f : files)
        out.push_back(read_signal_record(f));
    std::sort(out.begin(), out.end(),
              [](const signal_record& a, const signal_record& b) { return a.label < b.label; });
    return out;
}

void write_quantized_csv(std::ostream& out, const std::vector<quantized_record>& recs,
                         bool with_synthetic_flag)
{
    const std::size_t nf = recs.empty() ? 0 : recs.front().features.size();
    for (std::size_t f = 0; f < nf; ++f)
        out << "feature_" << f << ',';
    out << "class,variant";
    if (with_synthetic_flag)
        out << ",synthetic";
    out << '\n';
    for (const auto& r : recs) {
        if (r.features.size() != nf)
            throw dimension_error("quantized records differ in feature count");
        for (double v : r.features)
            out << format_double(v) << ',';
        out << to_string(r.label.cls) << ',' << r.label.variant;
        if (with_synthetic_flag)
            out << ',' << (r.synthetic ? 1 : 0);
        out << '\n';
    }
}

std::vector<quantized_record> read_quantized_csv(std::istream& in, const std::string& source, int intervals)
{
    std::string line;
    int lineno = 1;
    if (!std::getline(in, line))
        throw data_error(at_line(source, lineno) + ": missing header row");
    const auto header = split_fields(strip_cr(line));
    std::size_t nf = 0;
    while (nf < header.size() && header[nf] == "feature_" + std::to_string(nf))
        ++nf;
    const bool has_flag = header.size() == nf + 3 && header[nf + 2] == "synthetic";
    if (nf == 0 || header.size() < nf + 2 || header[nf] != "class" || header[nf + 1] != "variant" ||
        (header.size() != nf + 2 && !has_flag))
        throw data_error(at_line(source, lineno) +
                         ": header must be feature_0..feature_{n-1},class,variant[,synthetic]");
    if (intervals < 1 || nf % static_cast<std::size_t>(intervals) != 0)
        throw data_error(source + ": feature count " + std::to_string(nf) +
                         " is not a multiple of the interval count " + std::to_string(intervals));

    std::vector<quantized_record> out;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty())
            continue;
        const auto where = at_line(source, lineno);
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw data_error(where + ": expected " + std::to_string(header.size()) + " columns");
        quantized_record r;
        r.intervals = intervals;
        for (std::size_t f = 0; f < nf; ++f)
            r.features.push_back(parse_double(fields[f], where));
        try {
            r.label.cls = parse_class(fields[nf]);
        } catch (const config_error& e) {
            throw data_error(where + ": " + e.what());
        }
        r.label.variant = static_cast<int>(parse_double(fields[nf + 1], where));
        if (r.label.variant < 1 || r.label.variant > n_variants)
            throw data_error(where + ": variant out of range");
        if (has_flag) {
            if (fields[nf + 2] != "0" && fields[nf + 2] != "1")
                throw data_error(where + ": synthetic flag must be 0 or 1");
            r.synthetic = fields[nf + 2] == "1";
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_quantized_file(const std::filesystem::path& path, const std::vector<quantized_record>& recs,
                          const quantization_config& cfg, bool with_synthetic_flag)
{
    std::ostringstream body;
    write_quantized_csv(body, recs, with_synthetic_flag);
    write_text_file(path, body.str());
    const nlohmann::json meta{{"intervals", cfg.intervals}, {"areas", format_areas(cfg.areas)}};
    write_text_file(sidecar_of(path), meta.dump(2) + "\n");
}

std::vector<quantized_record> read_quantized_file(const std::filesystem::path& path, int intervals)
{
    if (intervals <= 0) {
        intervals = 1;
        if (std::filesystem::exists(sidecar_of(path))) {
            try {
                intervals = nlohmann::json::parse(read_text_file(sidecar_of(path))).at("intervals").get<int>();
            } catch (const nlohmann::json::exception& e) {
                throw data_error(sidecar_of(path).filename().string() + ": " + e.what());
            }
        }
    }
    std::ifstream in(path);
    if (!in)
        throw data_error("cannot open '" + path.string() + "'");
    return read_quantized_csv(in, path.filename().string(), intervals);
}

void write_matrix_csv(std::ostream& out, const labeled_matrix& m)
{
    for (const auto& l : m.labels)
        out << ',' << l;
    out << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << m.labels[i];
        for (std::size_t j = 0; j < m.size(); ++j)
            out << ',' << format_double(m.at(i, j));
        out << '\n';
    }
}

labeled_matrix read_matrix_csv(std::istream& in, const std::string& source)
{
    std::string line;
    int lineno = 1;
    if (!std::getline(in, line))
        throw data_error(at_line(source, lineno) + ": missing header row");
    auto header = split_fields(strip_cr(line));
    if (header.empty() || !header[0].empty())
        throw data_error(at_line(source, lineno) + ": header must start with an empty corner cell");
    labeled_matrix m;
    m.labels.assign(header.begin() + 1, header.end());
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty())
            continue;
        const auto where = at_line(source, lineno);
        const auto fields = split_fields(line);
        const std::size_t row = static_cast<std::size_t>(lineno - 2);
        if (fields.size() != m.labels.size() + 1 || row >= m.labels.size() || fields[0] != m.labels[row])
            throw data_error(where + ": row does not match the column labels");
        for (std::size_t j = 1; j < fields.size(); ++j)
            m.values.push_back(parse_double(fields[j], where));
    }
    if (m.values.size() != m.labels.size() * m.labels.size())
        throw dimension_error(source + ": matrix is not square");
    return m;
}

void write_heatmap_csv(std::ostream& out, const mi_heatmap& hm)
{
    static constexpr const char* inputs[] = {"R", "G", "B"};
    out << "input";
    for (int s = 0; s < n_series; ++s)
        out << ',' << series_name(s);
    out << '\n';
    for (int c = 0; c < n_colors; ++c) {
        out << inputs[c];
        for (int s = 0; s < n_series; ++s)
            out << ',' << format_double(hm.values[c][s]);
        out << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const sweep_grid& grid)
{
    out << "intervals,records_per_pattern,mean_accuracy,std_accuracy\n";
    for (const auto& c : grid.cells)
        out << c.intervals << ',' << c.records_per_pattern << ',' << format_double(c.mean) << ','
            << format_double(c.stddev) << '\n';
}

void write_area_csv(std::ostream& out, const std::vector<area_row>& rows)
{
    out << "areas,features,mean_accuracy,std_accuracy,min_accuracy,max_accuracy\n";
    for (const auto& r : rows) {
        std::string areas;
        for (int a : r.areas)
            areas += (areas.empty() ? "D" : "+D") + std::to_string(a + 1);
        out << areas << ',' << r.features << ',' << format_double(r.mean) << ','
            << format_double(r.stddev) << ',' << format_double(r.min) << ',' << format_double(r.max) << '\n';
    }
}

void write_sigma_csv(std::ostream& out, const std::vector<sigma_result>& rows)
{
    out << "sigma,mean_accuracy\n";
    for (const auto& r : rows)
        out << format_double(r.sigma) << ',' << format_double(r.mean_accuracy) << '\n';
}

void write_text_file(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw data_error("cannot write '" + path.string() + "'");
    out << content;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw data_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace fluidrc
