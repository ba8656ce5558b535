#include "riskbandit/harness/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <iomanip>
#include <sstream>

namespace riskbandit::harness {

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string run_csv(const RunLog& log) {
  std::ostringstream os;
  os << "t,phase,reward";
  for (std::size_t m = 0; m < log.bounds.size(); ++m) os << ",c" << m + 1;
  os << ",gamma";
  for (int d = 0; d < log.action_dim; ++d) os << ",a" << d + 1;
  os << '\n';
  for (const auto& r : log.records) {
    os << r.t << ',' << (r.phase == Phase::Train ? "train" : "infer") << ','
       << format_double(r.reward);
    for (Eigen::Index m = 0; m < r.constraints.size(); ++m) os << ',' << format_double(r.constraints[m]);
    os << ',' << format_double(r.gamma);
    for (Eigen::Index d = 0; d < r.action.size(); ++d) os << ',' << format_double(r.action[d]);
    os << '\n';
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_run_csv(const std::filesystem::path& path, const RunLog& log) {
  write_text(path, run_csv(log));
}

nlohmann::json run_summary_json(const RunLog& log) {
  nlohmann::json j;
  j["seed"] = log.seed;
  j["env"] = log.env_name;
  j["discarded_observations"] = log.discarded_observations;
  j["infer_alphas"] = log.infer_alphas;
  j["summary"] = log.summary.to_json();
  return j;
}

nlohmann::json sweep_json(const SweepResult& result) {
  nlohmann::json j;
  j["axis"] = to_string(result.axis);
  auto rows = nlohmann::json::array();
  const auto table = result.table();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    nlohmann::json r;
    r["value"] = row.value;
    r["runs"] = row.runs;
    r["failures"] = result.cells[i].failures;
    auto metrics = nlohmann::json::object();
    for (const auto& [name, stat] : row.metrics) {
      metrics[name] = {{"mean", stat.mean}, {"ci", stat.half_width}, {"n", stat.n}};
    }
    r["metrics"] = metrics;
    rows.push_back(r);
  }
  j["cells"] = rows;
  return j;
}

std::string sweep_csv(const SweepResult& result) {
  const auto table = result.table();
  std::vector<std::string> names;
  for (const auto& row : table) {
    for (const auto& [name, _] : row.metrics) {
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
  }
  std::ostringstream os;
  os << to_string(result.axis) << ",runs,failures";
  for (const auto& n : names) os << ',' << n << "_mean," << n << "_ci";
  os << '\n';
  for (const auto& row : table) {
    os << format_double(row.value) << ',' << row.runs << ',' << row.failures;
    for (const auto& n : names) {
      auto it = std::find_if(row.metrics.begin(), row.metrics.end(),
                             [&](const auto& p) { return p.first == n; });
      if (it == row.metrics.end()) {
        os << ",,";
      } else {
        os << ',' << format_double(it->second.mean) << ',' << format_double(it->second.half_width);
      }
    }
    os << '\n';
  }
  return os.str();
}

CurveBand curve_band(std::span<const RunLog> logs, CurveField field) {
  CurveBand band;
  if (logs.empty()) return band;
  std::size_t len = std::numeric_limits<std::size_t>::max();
  for (const auto& log : logs) len = std::min(len, log.records.size());
  std::vector<double> column(logs.size());
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t k = 0; k < logs.size(); ++k) {
      const auto& r = logs[k].records[i];
      column[k] = field == CurveField::Reward ? r.reward : r.gamma;
    }
    double sum = 0.0;
    for (double v : column) sum += v;
    band.x.push_back(static_cast<double>(logs[0].records[i].t));
    band.mean.push_back(sum / static_cast<double>(column.size()));
    band.low.push_back(percentile(column, 0.15));
    band.high.push_back(percentile(column, 0.85));
  }
  return band;
}

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const {
    const double w = kWidth - kLeft - kRight;
    return kLeft + (x1 > x0 ? (x - x0) / (x1 - x0) : 0.5) * w;
  }
  double py(double y) const {
    const double h = kHeight - kTop - kBottom;
    return kTop + h - (y1 > y0 ? (y - y0) / (y1 - y0) : 0.5) * h;
  }
};

void header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(title) << "</text>\n";
}

void axes(std::ostringstream& os, const Frame& f, const std::string& x_label,
          const std::string& y_label, bool x_ticks) {
  const double xa = kLeft, xb = kWidth - kRight, ya = kTop, yb = kHeight - kBottom;
  os << "<line x1=\"" << xa << "\" y1=\"" << yb << "\" x2=\"" << xb << "\" y2=\"" << yb
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << xa << "\" y1=\"" << ya << "\" x2=\"" << xa << "\" y2=\"" << yb
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    os << "<text x=\"" << xa - 6 << "\" y=\"" << f.py(y) + 4 << "\" text-anchor=\"end\">"
       << std::setprecision(3) << y << "</text>\n";
    if (x_ticks) {
      const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
      os << "<text x=\"" << f.px(x) << "\" y=\"" << yb + 16 << "\" text-anchor=\"middle\">"
         << std::setprecision(4) << x << "</text>\n";
    }
  }
  os << "<text x=\"" << (xa + xb) / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
     << escape(x_label) << "</text>\n"
     << "<text transform=\"translate(16," << (ya + yb) / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, std::span<const LineSeries> series) {
  Frame f{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(),
          std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest()};
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.band.x.size(); ++i) {
      f.x0 = std::min(f.x0, s.band.x[i]);
      f.x1 = std::max(f.x1, s.band.x[i]);
      f.y0 = std::min({f.y0, s.band.low[i], s.band.mean[i]});
      f.y1 = std::max({f.y1, s.band.high[i], s.band.mean[i]});
    }
  }
  if (f.x0 > f.x1) f = {0, 1, 0, 1};

  std::ostringstream os;
  header(os, title);
  axes(os, f, x_label, y_label, true);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& b = series[k].band;
    const char* color = kPalette[k % std::size(kPalette)];
    if (!b.x.empty()) {
      os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < b.x.size(); ++i) os << f.px(b.x[i]) << ',' << f.py(b.high[i]) << ' ';
      for (std::size_t i = b.x.size(); i-- > 0;) os << f.px(b.x[i]) << ',' << f.py(b.low[i]) << ' ';
      os << "\"/>\n<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << color << "\" points=\"";
      for (std::size_t i = 0; i < b.x.size(); ++i) os << f.px(b.x[i]) << ',' << f.py(b.mean[i]) << ' ';
      os << "\"/>\n";
    }
    const double ly = kTop + 18.0 * static_cast<double>(k) + 10;
    os << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"10\" fill=\""
       << color << "\"/>\n<text x=\"" << kWidth - kRight + 30 << "\" y=\"" << ly << "\">"
       << escape(series[k].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                          std::span<const BarItem> bars) {
  Frame f{0, 1, 0, 0};
  for (const auto& b : bars) {
    f.y0 = std::min(f.y0, b.stat.low());
    f.y1 = std::max(f.y1, b.stat.high());
  }
  if (f.y1 <= f.y0) f.y1 = f.y0 + 1;

  std::ostringstream os;
  header(os, title);
  axes(os, f, "", y_label, false);
  const double slot = (kWidth - kLeft - kRight) / std::max<std::size_t>(bars.size(), 1);
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const auto& s = bars[k].stat;
    const double cx = kLeft + slot * (static_cast<double>(k) + 0.5);
    const double top = f.py(std::max(s.mean, 0.0)), base = f.py(std::min(s.mean, 0.0));
    os << "<rect x=\"" << cx - slot * 0.3 << "\" y=\"" << top << "\" width=\"" << slot * 0.6
       << "\" height=\"" << base - top << "\" fill=\"" << kPalette[k % std::size(kPalette)] << "\"/>\n"
       << "<line x1=\"" << cx << "\" y1=\"" << f.py(s.low()) << "\" x2=\"" << cx << "\" y2=\""
       << f.py(s.high()) << "\" stroke=\"black\"/>\n";
    for (double y : {s.low(), s.high()}) {
      os << "<line x1=\"" << cx - 6 << "\" y1=\"" << f.py(y) << "\" x2=\"" << cx + 6 << "\" y2=\""
         << f.py(y) << "\" stroke=\"black\"/>\n";
    }
    os << "<text x=\"" << cx << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
       << escape(bars[k].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace riskbandit::harness
