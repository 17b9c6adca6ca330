#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "gapflow/flow.hpp"
#include "gapflow/ocpec.hpp"

namespace gapflow {

/// Contents of a problem JSON file.
///
/// Matrices are given row-major, either as nested rows ([[5, -6], [3, 9]]),
/// as a flat array, or as a bare number for 1x1 blocks. Infinite bounds of K
/// are written as null or as the strings "inf" / "-inf".
struct ProblemFile {
  LcsOcpecProblem problem;
  DiscretizationConfig discretization;
  Reformulation reformulation = Reformulation::d_gap;
  GapConfig gap;
};

/// Throws ConfigError on malformed input, UnsupportedSet for a non-box K.
ProblemFile parse_problem_json(const std::string& text);
ProblemFile load_problem_file(const std::filesystem::path& path);

/// The bundled LCS benchmark shipped under data/.
std::filesystem::path bundled_problem_path();

void write_trace_header(std::ostream& os);
void write_trace_row(std::ostream& os, const TraceRecord& rec);
void write_trace_csv(std::ostream& os, const ContinuationTrace& trace);

void write_solution_csv(std::ostream& os, const Trajectory& traj);

}  // namespace gapflow
