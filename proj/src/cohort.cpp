#include "morpho/cohort.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "morpho/csv.hpp"
#include "morpho/error.hpp"
#include "morpho/mesh_io.hpp"

namespace morpho {

Standardizer Standardizer::fit(const std::vector<std::string>& names, const Eigen::MatrixXd& raw) {
  if (static_cast<Eigen::Index>(names.size()) != raw.cols()) {
    throw DimensionError("standardizer: name count does not match columns");
  }
  if (raw.rows() < 2) throw DataError("standardizer needs at least 2 rows");
  Standardizer s;
  s.names = names;
  s.means = raw.colwise().mean().transpose();
  s.sds.resize(raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double var = (raw.col(j).array() - s.means(j)).square().mean();
    s.sds(j) = std::sqrt(var);
    if (!(s.sds(j) > 1e-12 * std::max(1.0, std::abs(s.means(j))))) {
      throw DataError("confounder column '" + names[static_cast<std::size_t>(j)] +
                      "' is constant on the training subset (zero SD)");
    }
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& raw) const {
  if (raw.cols() != means.size()) throw DimensionError("standardizer: column count mismatch");
  return (raw.rowwise() - means.transpose()).array().rowwise() / sds.transpose().array();
}

bool Cohort::has_column(const std::string& name) const {
  return std::find(column_names.begin(), column_names.end(), name) != column_names.end();
}

Eigen::VectorXd Cohort::column(const std::string& name) const {
  auto it = std::find(column_names.begin(), column_names.end(), name);
  if (it == column_names.end()) throw DataError("column '" + name + "' not present in demographics");
  const Eigen::VectorXd v = columns.col(it - column_names.begin());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isnan(v(i))) {
      throw DataError("missing value of column '" + name + "' for subject '" + ids[static_cast<std::size_t>(i)] + "'");
    }
  }
  return v;
}

Eigen::MatrixXd Cohort::column_matrix(const std::vector<std::string>& names) const {
  Eigen::MatrixXd m(size(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = column(names[j]);
  return m;
}

Eigen::VectorXd Cohort::label_vector() const {
  Eigen::VectorXd y(size());
  for (Eigen::Index i = 0; i < size(); ++i) y(i) = labels[static_cast<std::size_t>(i)];
  return y;
}

std::vector<Eigen::Index> Cohort::class_indices(int label) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

Eigen::Index Cohort::count(int label) const { return static_cast<Eigen::Index>(class_indices(label).size()); }

std::optional<Eigen::Index> Cohort::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

Cohort Cohort::subset(const std::vector<Eigen::Index>& rows) const {
  Cohort c;
  c.column_names = column_names;
  c.templ = templ;
  c.deflated = deflated;
  const auto n = static_cast<Eigen::Index>(rows.size());
  c.shapes.resize(n, shapes.cols());
  c.columns.resize(n, columns.cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index i = rows[static_cast<std::size_t>(k)];
    if (i < 0 || i >= size()) throw DimensionError("cohort subset index out of range");
    c.ids.push_back(ids[static_cast<std::size_t>(i)]);
    c.labels.push_back(labels[static_cast<std::size_t>(i)]);
    c.shapes.row(k) = shapes.row(i);
    if (columns.cols() > 0) c.columns.row(k) = columns.row(i);
  }
  return c;
}

Cohort Cohort::with_shapes(ShapeMatrix new_shapes, bool is_deflated) const {
  if (new_shapes.rows() != size()) throw DimensionError("with_shapes: row count mismatch");
  Cohort c = *this;
  c.shapes = std::move(new_shapes);
  c.deflated = is_deflated;
  return c;
}

void Cohort::validate() const {
  const auto n = static_cast<std::size_t>(size());
  if (static_cast<std::size_t>(shapes.rows()) != n || labels.size() != n ||
      (columns.cols() > 0 && static_cast<std::size_t>(columns.rows()) != n)) {
    throw DimensionError("cohort: ids, shapes, labels and demographics disagree in size");
  }
  if (columns.cols() != static_cast<Eigen::Index>(column_names.size())) {
    throw DimensionError("cohort: column names do not match demographics width");
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("cohort: class labels must be 0 or 1");
  }
}

Cohort load_cohort(const CohortFiles& files) {
  MeshCorpus corpus = load_corpus(files.meshes, files.region_map);
  const CsvTable table = read_csv(files.demographics);
  const std::string source = files.demographics.string();
  const std::size_t id_col = table.column(files.id_column, source);
  const std::size_t none = table.header.size();
  const std::size_t class_col = files.class_column.empty() ? none : table.column(files.class_column, source);

  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (!row_of.emplace(table.rows[r][id_col], r).second) {
      throw DataError("duplicate subject '" + table.rows[r][id_col] + "' in '" + source + "'");
    }
  }

  Cohort c;
  c.ids = corpus.ids;
  c.shapes = std::move(corpus.shapes);
  c.templ = std::move(corpus.templ);
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j != id_col && j != class_col) c.column_names.push_back(table.header[j]);
  }
  c.columns.resize(c.size(), static_cast<Eigen::Index>(c.column_names.size()));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < c.ids.size(); ++i) {
    auto it = row_of.find(c.ids[i]);
    if (it == row_of.end()) {
      throw DataError("subject '" + c.ids[i] + "' has a mesh but no row in '" + source + "'");
    }
    const auto& row = table.rows[it->second];
    c.labels.push_back(class_col != none && row[class_col] == files.case_label ? 1 : 0);
    Eigen::Index k = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == id_col || j == class_col) continue;
      double v = nan;
      const std::string& cell = row[j];
      const char* end = cell.data() + cell.size();
      auto res = std::from_chars(cell.data(), end, v);
      if (res.ec != std::errc() || res.ptr != end) v = nan;
      c.columns(static_cast<Eigen::Index>(i), k++) = v;
    }
  }
  c.validate();
  return c;
}

}  // namespace morpho
