#include <algorithm>
#include <charconv>
#include <limits>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ercav/error.hpp"
#include "ercav/io.hpp"

namespace ercav::io {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& cell, std::size_t line_no) {
    double v = 0.0;
    const char* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        // from_chars rejects the spellings printf uses for non-finite values.
        if (cell == "nan" || cell == "NaN") return std::numeric_limits<double>::quiet_NaN();
        if (cell == "inf") return std::numeric_limits<double>::infinity();
        if (cell == "-inf") return -std::numeric_limits<double>::infinity();
        throw InputError("CSV line " + std::to_string(line_no) + ": not a number: '" + cell + "'");
    }
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_double: buffer too small");
    return {buf, ptr};
}

void write_scan_csv(const photo::SpectrumScan& scan, std::ostream& os) {
    os << "freq_hz,p_det,err,counts,trials\n";
    for (std::size_t i = 0; i < scan.freq_hz.size(); ++i)
        os << format_double(scan.freq_hz[i]) << ',' << format_double(scan.p_det[i]) << ','
           << format_double(scan.err[i]) << ',' << scan.counts[i] << ',' << scan.trials[i] << '\n';
}

void write_histogram_csv(const photo::Histogram& h, std::ostream& os) {
    os << "t_us,counts\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        os << format_double(h.bin_centers_us[i]) << ',' << format_double(h.counts[i]) << '\n';
}

void write_saturation_csv(std::span<const photo::SaturationPoint> points, std::ostream& os) {
    os << "power_w,p_det,p_det_err,fwhm_hz,fwhm_err_hz,converged\n";
    for (const auto& p : points)
        os << format_double(p.power_w) << ',' << format_double(p.p_det) << ',' << format_double(p.p_det_err)
           << ',' << format_double(p.fwhm_hz) << ',' << format_double(p.fwhm_err_hz) << ','
           << (p.converged ? 1 : 0) << '\n';
}

void write_g2_csv(const estimators::G2Series& g2, std::ostream& os) {
    os << "lag,g2,err\n";
    for (std::size_t i = 0; i < g2.lags.size(); ++i)
        os << g2.lags[i] << ',' << format_double(g2.values[i]) << ',' << format_double(g2.errors[i]) << '\n';
}

bool CsvTable::has(std::string_view name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

std::vector<double> CsvTable::column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("CSV has no column '" + std::string(name) + "'");
    const auto j = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[j]);
    return out;
}

CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        auto cells = split(s);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw InputError("CSV line " + std::to_string(line_no) + ": expected " +
                             std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_number(c, line_no));
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw InputError("CSV input is empty");
    return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open " + path.string());
    return read_csv(is);
}

photo::Histogram histogram_from_csv(const CsvTable& t) {
    return {t.column("t_us"), t.column("counts")};
}

photo::SpectrumScan scan_from_csv(const CsvTable& t) {
    photo::SpectrumScan s;
    s.freq_hz = t.column("freq_hz");
    s.p_det = t.column("p_det");
    s.err = t.column("err");
    const auto to_u64 = [](const std::vector<double>& v) {
        std::vector<std::uint64_t> out;
        for (double d : v) out.push_back(static_cast<std::uint64_t>(d));
        return out;
    };
    if (t.has("counts")) s.counts = to_u64(t.column("counts"));
    if (t.has("trials")) s.trials = to_u64(t.column("trials"));
    return s;
}

std::vector<photo::SaturationPoint> saturation_from_csv(const CsvTable& t) {
    const auto power = t.column("power_w");
    const auto p = t.column("p_det");
    const auto pe = t.column("p_det_err");
    const auto w = t.column("fwhm_hz");
    const auto we = t.column("fwhm_err_hz");
    const auto conv = t.has("converged") ? t.column("converged") : std::vector<double>(power.size(), 1.0);
    std::vector<photo::SaturationPoint> out;
    for (std::size_t i = 0; i < power.size(); ++i) out.push_back({power[i], p[i], pe[i], w[i], we[i], conv[i] != 0.0});
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        os.flush();
        if (!os) throw std::runtime_error("write to " + tmp.string() + " failed");
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace ercav::io
