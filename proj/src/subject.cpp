#include "mvtrace/subject.hpp"

#include <numeric>

#include "mvtrace/error.hpp"

namespace mvtrace {

void validate_subjects(const std::vector<SubjectRecord>& subjects) {
  if (subjects.empty()) throw ValidationError("no subjects");
  const auto& first = subjects.front();
  for (const auto& s : subjects) {
    if (s.task.rows() != s.rest.rows()) {
      throw ShapeError("subject " + s.id + ": task and rest vertex counts differ");
    }
    if (s.task.rows() != first.task.rows() || s.task.cols() != first.task.cols() ||
        s.rest.cols() != first.rest.cols()) {
      throw ShapeError("subject " + s.id + ": shape differs from subject " + first.id);
    }
  }
}

ViewData stack_vertices(const std::vector<SubjectRecord>& subjects, const std::vector<int>& which) {
  if (which.empty()) throw ValidationError("stack_vertices: empty subject selection");
  const auto& first = subjects.at(static_cast<std::size_t>(which.front()));
  const Eigen::Index m = first.vertex_count();
  ViewData out;
  out.task.resize(m * static_cast<Eigen::Index>(which.size()), first.task.cols());
  out.rest.resize(m * static_cast<Eigen::Index>(which.size()), first.rest.cols());
  Eigen::Index row = 0;
  for (int i : which) {
    const auto& s = subjects.at(static_cast<std::size_t>(i));
    if (s.task.rows() != m || s.rest.rows() != m) throw ShapeError("stack_vertices: vertex count mismatch");
    out.task.middleRows(row, m) = s.task;
    out.rest.middleRows(row, m) = s.rest;
    row += m;
  }
  return out;
}

ViewData stack_vertices(const std::vector<SubjectRecord>& subjects) {
  std::vector<int> all(subjects.size());
  std::iota(all.begin(), all.end(), 0);
  return stack_vertices(subjects, all);
}

}  // namespace mvtrace
