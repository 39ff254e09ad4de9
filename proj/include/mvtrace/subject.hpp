#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mvtrace {

// One subject: per-vertex feature rows for both views and a scalar score.
struct SubjectRecord {
  std::string id;
  Eigen::MatrixXd task;  // m x D_task
  Eigen::MatrixXd rest;  // m x D_rest
  double score = 0.0;

  Eigen::Index vertex_count() const { return task.rows(); }
};

// Paired per-sample view features; row r of `task` and `rest` is one sample.
struct ViewData {
  Eigen::MatrixXd task;
  Eigen::MatrixXd rest;

  Eigen::Index samples() const { return task.rows(); }
};

// Stacks every vertex row of the given subjects into one sample block.
ViewData stack_vertices(const std::vector<SubjectRecord>& subjects, const std::vector<int>& which);
ViewData stack_vertices(const std::vector<SubjectRecord>& subjects);

// Checks that all subjects share vertex count and view widths.
void validate_subjects(const std::vector<SubjectRecord>& subjects);

}  // namespace mvtrace
