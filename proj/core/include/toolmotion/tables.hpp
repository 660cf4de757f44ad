#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "toolmotion/classify.hpp"
#include "toolmotion/pipeline.hpp"

namespace toolmotion {

/// trial_id,operator_id,operator_class,scc,sdc,cr,n_strokes,n_subtrials,n_excluded
std::string features_csv(std::span<const TrialReport> reports);

/// trial_id,subtrial,operator_id,operator_class,active_tip,t_start,t_end,n_strokes,excluded,scc,sdc,cr
std::string subtrial_features_csv(std::span<const TrialReport> reports);

/// One row per detected stroke, sub-trials in order:
/// trial_id,subtrial,operator_id,operator_class,excluded,stroke,start_idx,end_idx,start_t,end_t,
/// duration,path_length,chord_length,curvature,start_x,start_y,peak_distance,prominence,hull_increment
std::string strokes_csv(std::span<const TrialReport> reports);

/// Dataset rows from features.csv text (no stroke sequences).
Dataset parse_features_csv(std::string_view text);

/// One stroke row of strokes.csv.
struct StrokeRecord {
  std::string trial_id;
  int subtrial = 0;
  std::string operator_id;
  SkillClass operator_class = SkillClass::Expert;
  bool excluded = false;
  int stroke = 0;
  double duration = 0.0;
  double path_length = 0.0;
  double curvature = 0.0;
  Vec2 start;
  double hull_increment = 0.0;
};

std::vector<StrokeRecord> parse_strokes_csv(std::string_view text);

/// Attaches the (curvature, duration, hull increment) sequences of every usable
/// sub-trial to the matching dataset row.
void attach_sequences(Dataset& ds, std::span<const StrokeRecord> strokes);

std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary file and renames, so readers never see a partial file.
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace toolmotion
