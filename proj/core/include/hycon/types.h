#pragma once

#include <Eigen/Dense>

namespace hycon {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace hycon
