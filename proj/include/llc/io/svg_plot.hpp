#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace llc {

/// Minimal static SVG chart: scatter and line series on linear or log axes,
/// with an optional second y axis for an overlay series.
class SvgPlot {
public:
    enum class Style { points, line };

    struct Series {
        std::string label;
        std::vector<double> x, y;
        Style style = Style::points;
        std::string color = "#1f77b4";
        bool secondary = false;  ///< plotted against the right-hand axis
    };

    SvgPlot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    SvgPlot& log_x(bool on = true) { logx_ = on; return *this; }
    SvgPlot& log_y(bool on = true) { logy_ = on; return *this; }
    SvgPlot& secondary_label(std::string label, double lo, double hi) {
        y2label_ = std::move(label);
        y2lo_ = lo;
        y2hi_ = hi;
        return *this;
    }
    SvgPlot& add(Series s) {
        if (s.x.size() != s.y.size()) throw std::invalid_argument("SvgPlot: series x/y length mismatch");
        series_.push_back(std::move(s));
        return *this;
    }
    /// Adds the identity line y = x across the primary data range.
    SvgPlot& identity_line() { identity_ = true; return *this; }

    std::string render() const {
        double xlo = kInf, xhi = -kInf, ylo = kInf, yhi = -kInf;
        for (const auto& s : series_) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!usable(s.x[i], logx_)) continue;
                xlo = std::min(xlo, tx(s.x[i]));
                xhi = std::max(xhi, tx(s.x[i]));
                if (s.secondary || !usable(s.y[i], logy_)) continue;
                ylo = std::min(ylo, ty(s.y[i]));
                yhi = std::max(yhi, ty(s.y[i]));
            }
        }
        if (identity_) {
            ylo = xlo = std::min(xlo, ylo);
            yhi = xhi = std::max(xhi, yhi);
        }
        if (!(xlo <= xhi)) xlo = 0, xhi = 1;
        if (!(ylo <= yhi)) ylo = 0, yhi = 1;
        if (xlo == xhi) xlo -= 0.5, xhi += 0.5;
        if (ylo == yhi) ylo -= 0.5, yhi += 0.5;
        const double padx = 0.04 * (xhi - xlo), pady = 0.06 * (yhi - ylo);
        xlo -= padx, xhi += padx, ylo -= pady, yhi += pady;

        auto px = [&](double v) { return kLeft + (v - xlo) / (xhi - xlo) * kPlotW; };
        auto py = [&](double v) { return kTop + kPlotH - (v - ylo) / (yhi - ylo) * kPlotH; };
        auto py2 = [&](double v) { return kTop + kPlotH - (v - y2lo_) / (y2hi_ - y2lo_) * kPlotH; };

        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
           << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        os << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" << escape(title_) << "</text>\n";
        os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kPlotW << "\" height=\"" << kPlotH
           << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double fx = xlo + (xhi - xlo) * i / 4.0, fy = ylo + (yhi - ylo) * i / 4.0;
            os << "<text x=\"" << px(fx) << "\" y=\"" << kTop + kPlotH + 16 << "\" text-anchor=\"middle\">" << tick(fx, logx_) << "</text>\n";
            os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">" << tick(fy, logy_) << "</text>\n";
            if (!y2label_.empty()) {
                const double f2 = y2lo_ + (y2hi_ - y2lo_) * i / 4.0;
                os << "<text x=\"" << kLeft + kPlotW + 6 << "\" y=\"" << py2(f2) + 4 << "\">" << tick(f2, false) << "</text>\n";
            }
        }
        os << "<text x=\"" << kLeft + kPlotW / 2 << "\" y=\"" << kHeight - 8 << "\" text-anchor=\"middle\">" << escape(xlabel_) << "</text>\n";
        os << "<text transform=\"translate(16," << kTop + kPlotH / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << escape(ylabel_) << "</text>\n";
        if (!y2label_.empty())
            os << "<text transform=\"translate(" << kWidth - 10 << "," << kTop + kPlotH / 2 << ") rotate(90)\" text-anchor=\"middle\">"
               << escape(y2label_) << "</text>\n";
        if (identity_)
            os << "<line x1=\"" << px(xlo) << "\" y1=\"" << py(xlo) << "\" x2=\"" << px(xhi) << "\" y2=\"" << py(xhi)
               << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";

        int legend = 0;
        for (const auto& s : series_) {
            auto yof = [&](double v) { return s.secondary ? py2(v) : py(ty(v)); };
            if (s.style == Style::line) {
                os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1\" points=\"";
                for (std::size_t i = 0; i < s.x.size(); ++i)
                    if (usable(s.x[i], logx_) && (s.secondary || usable(s.y[i], logy_))) os << px(tx(s.x[i])) << ',' << yof(s.y[i]) << ' ';
                os << "\"/>\n";
            } else {
                for (std::size_t i = 0; i < s.x.size(); ++i)
                    if (usable(s.x[i], logx_) && (s.secondary || usable(s.y[i], logy_)))
                        os << "<circle cx=\"" << px(tx(s.x[i])) << "\" cy=\"" << yof(s.y[i]) << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
            }
            if (!s.label.empty()) {
                const double ly = kTop + 14 + 16 * legend++;
                os << "<rect x=\"" << kLeft + 10 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
                os << "<text x=\"" << kLeft + 26 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
            }
        }
        os << "</svg>\n";
        return os.str();
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write plot " + path.string());
        out << render();
    }

private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    static constexpr int kWidth = 720, kHeight = 460, kLeft = 70, kTop = 36, kPlotW = 580, kPlotH = 370;

    double tx(double v) const { return logx_ ? std::log10(v) : v; }
    double ty(double v) const { return logy_ ? std::log10(v) : v; }
    static bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }

    static std::string tick(double v, bool log) {
        std::ostringstream os;
        os.precision(3);
        if (log) os << "1e" << v;
        else os << v;
        return os.str();
    }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else if (c == '&') out += "&amp;";
            else out += c;
        }
        return out;
    }

    std::string title_, xlabel_, ylabel_, y2label_;
    double y2lo_ = 0.0, y2hi_ = 1.0;
    bool logx_ = false, logy_ = false, identity_ = false;
    std::vector<Series> series_;
};

}  // namespace llc
