#pragma once

#include <string>
#include <vector>

#include "toolmotion/features.hpp"

namespace toolmotion {

/// AC(i) for i = 3..N; empty below three vertices.
std::vector<double> cumulative_area_curve(const SearchGraph& g);

/// stroke,area rows for i = 3..N.
std::string cumulative_area_csv(const SearchGraph& g);

/// Line chart of AC(i) against stroke index.
std::string cumulative_area_svg(const SearchGraph& g, const std::string& title);

/// Vertices coloured by stroke order (blue to red), radius proportional to
/// stroke length, edges in stroke order and the convex hull outline. A
/// degenerate hull renders as a segment.
std::string search_graph_svg(const SearchGraph& g, const std::string& title);

/// Escapes &, <, >, " and ' for XML text and attributes.
std::string xml_escape(std::string_view s);

}  // namespace toolmotion
