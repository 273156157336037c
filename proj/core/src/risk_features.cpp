#include "longic/risk_features.hpp"

#include "longic/csv.hpp"
#include "longic/error.hpp"

#include <string>

namespace longic {

Eigen::MatrixXd RiskAugmentedDataset::augmented() const {
  Eigen::MatrixXd out(base.X.rows(), base.X.cols() + risk.cols());
  out << base.X, risk;
  return out;
}

std::string risk_column_name(int source_visit) {
  return "risk_from_v" + std::to_string(source_visit);
}

Eigen::VectorXd estimate_risk(const Classifier& classifier, const Eigen::MatrixXd& rows) {
  if (rows.cols() != classifier.input_dim()) {
    throw DimensionError("estimate_risk: rows have " + std::to_string(rows.cols()) +
                         " columns, classifier expects " + std::to_string(classifier.input_dim()));
  }
  return classifier.predict_proba_rows(rows);
}

RiskAugmentedDataset augment_with_risk(const VisitDataset& base,
                                       std::span<const DesignMatrix> earlier,
                                       std::span<const ClassifierPtr> classifiers) {
  if (earlier.size() != classifiers.size()) {
    throw DimensionError("augment_with_risk: one classifier per earlier visit is required");
  }
  RiskAugmentedDataset out;
  out.base = base;
  const auto n = static_cast<Eigen::Index>(base.rows());
  out.risk.resize(n, static_cast<Eigen::Index>(earlier.size()));
  for (std::size_t k = 0; k < earlier.size(); ++k) {
    if (!classifiers[k]) throw ConfigError("augment_with_risk: untrained classifier");
    const auto& design = earlier[k];
    const auto index = index_ids(design.ids);
    Eigen::MatrixXd rows(n, design.X.cols());
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& id = base.ids[static_cast<std::size_t>(r)];
      const auto it = index.find(id);
      if (it == index.end()) {
        throw DataError("continuity violated: id '" + id + "' has no row at visit " +
                        std::to_string(design.visit));
      }
      rows.row(r) = design.X.row(static_cast<Eigen::Index>(it->second));
    }
    out.risk.col(static_cast<Eigen::Index>(k)) = estimate_risk(*classifiers[k], rows);
    out.provenance.push_back(std::string(classifiers[k]->kind()) + "@v" +
                             std::to_string(design.visit));
  }
  return out;
}

DesignMatrix augment_with_carryforward(const Cohort& cohort, int v) {
  if (v < 2) throw ConfigError("carry-forward augmentation needs v >= 2");
  const auto& current = cohort.visit(v);
  DesignMatrix out;
  out.visit = v;
  out.ids = current.ids;
  out.y_next = current.y_next;
  Eigen::Index width = 0;
  for (int k = 1; k <= v; ++k) width += cohort.visit(k).X.cols();
  out.X.resize(static_cast<Eigen::Index>(current.rows()), width);
  Eigen::Index offset = 0;
  for (int k = 1; k <= v; ++k) {
    const auto& visit = cohort.visit(k);
    const auto index = index_ids(visit.ids);
    for (std::size_t r = 0; r < current.rows(); ++r) {
      const auto it = index.find(current.ids[r]);
      if (it == index.end()) {
        throw DataError("continuity violated: id '" + current.ids[r] + "' has no row at visit " +
                        std::to_string(k));
      }
      out.X.block(static_cast<Eigen::Index>(r), offset, 1, visit.X.cols()) =
          visit.X.row(static_cast<Eigen::Index>(it->second));
    }
    for (auto idx : visit.present) {
      out.columns.push_back(cohort.schema.features[idx].name + "@v" + std::to_string(k));
    }
    offset += visit.X.cols();
  }
  return out;
}

void write_design_file(const DesignMatrix& design, const std::filesystem::path& file) {
  if (design.columns.size() != static_cast<std::size_t>(design.X.cols())) {
    throw DimensionError("design file: column names do not match the matrix width");
  }
  csv::Table table;
  table.header.push_back("id");
  table.header.insert(table.header.end(), design.columns.begin(), design.columns.end());
  table.header.push_back("y_next");
  for (std::size_t r = 0; r < design.rows(); ++r) {
    std::vector<std::string> row{design.ids[r]};
    for (Eigen::Index c = 0; c < design.X.cols(); ++c) {
      row.push_back(csv::format_double(design.X(static_cast<Eigen::Index>(r), c)));
    }
    row.push_back(std::to_string(design.y_next[r]));
    table.rows.push_back(std::move(row));
  }
  csv::write(table, file);
}

}  // namespace longic
