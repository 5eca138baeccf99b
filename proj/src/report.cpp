#include "parirl/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "parirl/config.hpp"

namespace parirl {

namespace {

std::string join_semis(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ";";
    out += fmt_num(v[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string s = "run_id,seed,metric,value,r0,n_points,n_excluded\n";
  for (const MetricRow& r : rows) {
    s += r.run_id + "," + std::to_string(r.seed) + "," + r.metric + "," + fmt_num(r.value) + "," +
         join_semis(r.r0) + "," + std::to_string(r.n_points) + "," +
         std::to_string(r.n_excluded) + "\n";
  }
  return s;
}

std::string front_csv(const std::vector<FrontPoint>& front) {
  size_t m = front.empty() ? 0 : front.front().returns.size();
  std::string s = "policy_id,omega";
  for (size_t i = 1; i <= m; ++i) s += ",r" + std::to_string(i);
  s += "\n";
  for (const FrontPoint& p : front) {
    s += p.policy_id + "," + join_semis(p.omega);
    for (double r : p.returns) s += "," + fmt_num(r);
    s += "\n";
  }
  return s;
}

std::vector<FrontPoint> parse_front_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(origin + ": empty front csv");
  std::vector<std::string> header = split(line, ',');
  if (header.size() < 3 || header[0] != "policy_id" || header[1] != "omega")
    throw std::runtime_error(origin + ": unexpected front csv header");
  size_t m = header.size() - 2;
  std::vector<FrontPoint> out;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size())
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": wrong column count");
    FrontPoint p;
    p.policy_id = cells[0];
    if (!cells[1].empty())
      for (const std::string& w : split(cells[1], ';')) p.omega.push_back(std::stod(w));
    for (size_t i = 0; i < m; ++i) p.returns.push_back(std::stod(cells[2 + i]));
    out.push_back(std::move(p));
  }
  return out;
}

std::string distance_matrix_csv(const std::vector<std::string>& ids,
                                const std::vector<std::vector<double>>& d) {
  std::string s = "reward_id";
  for (const std::string& id : ids) s += "," + id;
  s += "\n";
  for (size_t i = 0; i < ids.size(); ++i) {
    s += ids[i];
    for (size_t j = 0; j < ids.size(); ++j) s += "," + fmt_num(d[i][j]);
    s += "\n";
  }
  return s;
}

std::string diagnostics_csv(const std::vector<StepDiagnostics>& diags) {
  std::string s =
      "step,branch,budget,targets,measured,reg_term,regret,fork_distance,env_steps\n";
  for (const StepDiagnostics& d : diags) {
    s += std::to_string(d.step) + "," + std::to_string(d.branch) + "," + fmt_num(d.budget) + "," +
         join_semis(d.targets) + "," + join_semis(d.measured) + "," + fmt_num(d.reg_term) + "," +
         fmt_num(d.regret) + "," + fmt_num(d.fork_distance) + "," + std::to_string(d.env_steps) +
         "\n";
  }
  return s;
}

namespace {

struct Bounds {
  double lo = 0.0, hi = 1.0;
  void expand(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

std::string color_for(const FrontPoint& p) {
  // omega[0] = 1 maps to red, 0 to blue; unannotated points are grey.
  if (p.omega.empty()) return "#888888";
  double w = std::clamp(p.omega[0], 0.0, 1.0);
  int r = static_cast<int>(std::lround(40 + 200 * w));
  int b = static_cast<int>(std::lround(40 + 200 * (1.0 - w)));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x28%02x", r, b);
  return buf;
}

}  // namespace

std::string scatter_svg(const std::vector<ScatterSeries>& series) {
  const double W = 640, H = 480, ML = 60, MR = 20, MT = 20, MB = 45;
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  bool first = true;
  for (const ScatterSeries& s : series)
    for (const FrontPoint& p : s.points) {
      if (p.returns.size() < 2) continue;
      if (first) {
        xlo = xhi = p.returns[0];
        ylo = yhi = p.returns[1];
        first = false;
      } else {
        xlo = std::min(xlo, p.returns[0]);
        xhi = std::max(xhi, p.returns[0]);
        ylo = std::min(ylo, p.returns[1]);
        yhi = std::max(yhi, p.returns[1]);
      }
    }
  if (xhi - xlo < 1e-12) { xlo -= 0.5; xhi += 0.5; }
  if (yhi - ylo < 1e-12) { ylo -= 0.5; yhi += 0.5; }
  double padx = 0.05 * (xhi - xlo), pady = 0.05 * (yhi - ylo);
  xlo -= padx; xhi += padx; ylo -= pady; yhi += pady;
  auto px = [&](double x) { return ML + (x - xlo) / (xhi - xlo) * (W - ML - MR); };
  auto py = [&](double y) { return H - MB - (y - ylo) / (yhi - ylo) * (H - MT - MB); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ML << "\" y1=\"" << (H - MB) << "\" x2=\"" << (W - MR) << "\" y2=\""
      << (H - MB) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << (H - MB)
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double xv = xlo + (xhi - xlo) * i / 4.0, yv = ylo + (yhi - ylo) * i / 4.0;
    svg << "<text x=\"" << px(xv) << "\" y=\"" << (H - MB + 16)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt_num(std::round(xv * 1000) / 1000)
        << "</text>\n";
    svg << "<text x=\"" << (ML - 6) << "\" y=\"" << (py(yv) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt_num(std::round(yv * 1000) / 1000)
        << "</text>\n";
  }
  svg << "<text x=\"" << (ML + (W - ML - MR) / 2) << "\" y=\"" << (H - 8)
      << "\" font-size=\"13\" text-anchor=\"middle\">objective 1 return</text>\n";
  svg << "<text x=\"14\" y=\"" << (MT + (H - MT - MB) / 2)
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << (MT + (H - MT - MB) / 2) << ")\">objective 2 return</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const ScatterSeries& s = series[si];
    for (const FrontPoint& p : s.points) {
      if (p.returns.size() < 2) continue;
      double x = px(p.returns[0]), y = py(p.returns[1]);
      std::string fill = color_for(p);
      if (si % 3 == 0) {
        svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"5\" fill=\"" << fill
            << "\" stroke=\"black\" stroke-width=\"0.6\"/>\n";
      } else if (si % 3 == 1) {
        svg << "<rect x=\"" << (x - 4.2) << "\" y=\"" << (y - 4.2)
            << "\" width=\"8.4\" height=\"8.4\" fill=\"" << fill
            << "\" stroke=\"black\" stroke-width=\"0.6\"/>\n";
      } else {
        svg << "<polygon points=\"" << x << "," << (y - 5.2) << " " << (x - 4.8) << ","
            << (y + 4.2) << " " << (x + 4.8) << "," << (y + 4.2) << "\" fill=\"" << fill
            << "\" stroke=\"black\" stroke-width=\"0.6\"/>\n";
      }
    }
  }
  double ly = MT + 8;
  for (size_t si = 0; si < series.size(); ++si) {
    double lx = W - MR - 140;
    if (si % 3 == 0)
      svg << "<circle cx=\"" << lx << "\" cy=\"" << ly << "\" r=\"5\" fill=\"#888888\" "
          << "stroke=\"black\" stroke-width=\"0.6\"/>\n";
    else if (si % 3 == 1)
      svg << "<rect x=\"" << (lx - 4.2) << "\" y=\"" << (ly - 4.2)
          << "\" width=\"8.4\" height=\"8.4\" fill=\"#888888\" stroke=\"black\" "
          << "stroke-width=\"0.6\"/>\n";
    else
      svg << "<polygon points=\"" << lx << "," << (ly - 5.2) << " " << (lx - 4.8) << ","
          << (ly + 4.2) << " " << (lx + 4.8) << "," << (ly + 4.2)
          << "\" fill=\"#888888\" stroke=\"black\" stroke-width=\"0.6\"/>\n";
    svg << "<text x=\"" << (lx + 10) << "\" y=\"" << (ly + 4) << "\" font-size=\"12\">"
        << series[si].name << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace parirl
