#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mgilc {

struct LinearSystem {
    Eigen::MatrixXd a, b, c, d;
    std::vector<std::string> state_labels, input_labels, output_labels;
    double condition_estimate = 1.0;  // of the state matrix; large values are only flagged
    bool ill_conditioned = false;

    Eigen::Index states() const { return a.rows(); }
    Eigen::Index inputs() const { return b.cols(); }
    Eigen::Index outputs() const { return c.rows(); }
};

}  // namespace mgilc
