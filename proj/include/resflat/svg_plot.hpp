#pragma once

#include <string>
#include <vector>

#include "resflat/record.hpp"

namespace resflat {

enum class PlotAxis { Depth, Filters, Ratio };

const char* plot_axis_name(PlotAxis axis);
PlotAxis plot_axis_from_name(const std::string& name);

// Final train/val loss against the chosen axis, one series per
// (variant, split) pair. Sequential is red, parallel blue; train solid,
// val dashed. The x axis is log2 scaled. Records sharing an x value are
// averaged. Output bytes depend only on the record payloads.
std::string emit_plot(const std::vector<ExperimentRecord>& records, PlotAxis axis);

void write_plot(const std::string& path, const std::vector<ExperimentRecord>& records,
                PlotAxis axis);

}  // namespace resflat
