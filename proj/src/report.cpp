#include "cup/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "cup/error.hpp"
#include "cup/io.hpp"
#include "cup/judging.hpp"
#include "cup/orchestrator.hpp"
#include "cup/planning.hpp"
#include "cup/rng.hpp"

namespace cup {

namespace fs = std::filesystem;

namespace {

constexpr const char* kModule = "orchestrator";

std::string cell(const std::optional<double>& v) { return v ? io::fixed2(*v) : std::string("—"); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

} // namespace

std::vector<SummaryRow> summary_rows(const fs::path& out_dir) {
    std::vector<JudgeReport> reports;
    for (int k = 1; fs::exists(out_dir / ("record_" + std::to_string(k) + ".json")); ++k) {
        reports.push_back(iteration_record_from_json(io::read_json(out_dir / ("record_" + std::to_string(k) + ".json"))).report);
    }
    if (reports.empty()) {
        throw Error(kModule, "EmptyRunDirectory", out_dir.string());
    }

    std::vector<SummaryRow> rows;
    SummaryRow random;
    random.method = "Random";
    if (fs::exists(out_dir / "baseline_report.json")) {
        const auto baseline = judge_report_from_json(io::read_json(out_dir / "baseline_report.json"));
        random.accessibility = baseline.quant.accessibility;
        random.ecology = baseline.quant.ecology;
        random.experience = baseline.qual.experience;
        random.overall = baseline.overall;
    } else {
        const auto config = io::read_json(out_dir / "config.json");
        const auto judge = JudgeConfig::from_json(config.value("judge", nlohmann::json::object()));
        const Region region = region_from_json(io::read_json(out_dir / "region.json"));
        Rng rng(derive_seed(config.value("seed", std::uint64_t{7}), 1));
        const UrbanPlan plan = random_baseline_plan(region, rng);
        random.accessibility = accessibility(plan, region, judge.radius);
        random.ecology = ecology(plan, region, judge.ecology_by_count);
    }
    rows.push_back(random);

    for (const auto& r : reports) {
        rows.push_back({method_label(r.iteration), r.quant.accessibility, r.quant.ecology, r.qual.experience, r.overall});
    }
    return rows;
}

std::string render_summary_markdown(const std::vector<SummaryRow>& rows) {
    std::ostringstream out;
    out << "Planning efficacy (%)\n\n"
        << "| Method | Access. | Ecology | Experi. | Overall |\n"
        << "|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        out << "| " << r.method << " | " << io::fixed2(r.accessibility) << " | " << io::fixed2(r.ecology) << " | "
            << cell(r.experience) << " | " << cell(r.overall) << " |\n";
    }
    return out.str();
}

std::string render_summary_svg(const std::vector<SummaryRow>& rows) {
    std::vector<const SummaryRow*> iterations;
    for (const auto& r : rows) {
        if (r.method != "Random") iterations.push_back(&r);
    }
    const double width = 480, height = 300, left = 50, right = 20, top = 20, bottom = 40;
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    const std::size_t n = iterations.size();
    auto x_of = [&](std::size_t i) { return left + (n <= 1 ? plot_w / 2 : plot_w * i / (n - 1)); };
    auto y_of = [&](double v) { return top + plot_h * (1.0 - std::clamp(v, 0.0, 100.0) / 100.0); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
        << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 100; tick += 25) {
        svg << "<text x=\"" << left - 8 << "\" y=\"" << fmt(y_of(tick) + 4) << "\" font-size=\"10\" text-anchor=\"end\">"
            << tick << "</text>\n";
    }
    for (std::size_t i = 0; i < n; ++i) {
        svg << "<text x=\"" << fmt(x_of(i)) << "\" y=\"" << top + plot_h + 16
            << "\" font-size=\"10\" text-anchor=\"middle\">k=" << i + 1 << "</text>\n";
    }
    struct Series {
        const char* name;
        const char* color;
        double (*value)(const SummaryRow&);
    };
    const Series series[] = {
        {"Access.", "#1f77b4", [](const SummaryRow& r) { return r.accessibility; }},
        {"Ecology", "#2ca02c", [](const SummaryRow& r) { return r.ecology; }},
        {"Experi.", "#d62728", [](const SummaryRow& r) { return r.experience.value_or(0.0); }},
    };
    double legend_x = left + 10;
    for (const auto& s : series) {
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < n; ++i) {
            svg << (i ? " " : "") << fmt(x_of(i)) << "," << fmt(y_of(s.value(*iterations[i])));
        }
        svg << "\"/>\n";
        for (std::size_t i = 0; i < n; ++i) {
            svg << "<circle cx=\"" << fmt(x_of(i)) << "\" cy=\"" << fmt(y_of(s.value(*iterations[i])))
                << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
        }
        svg << "<text x=\"" << legend_x << "\" y=\"" << height - 6 << "\" font-size=\"11\" fill=\"" << s.color
            << "\">" << s.name << "</text>\n";
        legend_x += 70;
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string report(const fs::path& out_dir) {
    const auto rows = summary_rows(out_dir);
    const std::string markdown = render_summary_markdown(rows);
    io::write_text(out_dir / "summary.md", markdown);
    io::write_text(out_dir / "summary.svg", render_summary_svg(rows));
    return markdown;
}

} // namespace cup
