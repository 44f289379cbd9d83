#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cup {

struct SummaryRow {
    std::string method;
    double accessibility = 0.0;
    double ecology = 0.0;
    std::optional<double> experience;
    std::optional<double> overall;
};

// Rows: Random baseline, then iteration 1..K.
std::vector<SummaryRow> summary_rows(const std::filesystem::path& out_dir);

std::string render_summary_markdown(const std::vector<SummaryRow>& rows);

// Line chart of accessibility, ecology and experience across iterations.
std::string render_summary_svg(const std::vector<SummaryRow>& rows);

// Writes summary.md and summary.svg into out_dir and returns the markdown.
// Throws EmptyRunDirectory when no iteration record exists.
std::string report(const std::filesystem::path& out_dir);

} // namespace cup
