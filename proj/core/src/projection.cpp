#include "mdreg/projection.hpp"

#include "mdreg/embedding_io.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace mdreg::eval {

RowMatrix pca_project_2d(const RowMatrix& vectors) {
  if (vectors.rows() < 1 || vectors.cols() < 2) throw ParameterError("projection needs n >= 1 and d >= 2");
  const Eigen::RowVectorXd mean = vectors.colwise().mean();
  const Eigen::MatrixXd centered = vectors.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues ascend; take the last two columns.
  const Eigen::Index d = cov.cols();
  Eigen::MatrixXd axes(d, 2);
  axes.col(0) = eig.eigenvectors().col(d - 1);
  axes.col(1) = eig.eigenvectors().col(d - 2);
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    axes.col(c).cwiseAbs().maxCoeff(&arg);
    if (axes(arg, c) < 0.0) axes.col(c) *= -1.0;
  }
  return centered * axes;
}

std::string projection_csv(const EmbeddingSet& set) {
  const RowMatrix p = pca_project_2d(set.vectors);
  std::ostringstream out;
  out << "id,label,px,py\r\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << io::csv_escape(i < set.ids.size() ? set.ids[i] : std::to_string(i)) << ',' << io::format_real(set.labels[i])
        << ',' << io::format_real(p(r, 0)) << ',' << io::format_real(p(r, 1)) << "\r\n";
  }
  return out.str();
}

}  // namespace mdreg::eval
