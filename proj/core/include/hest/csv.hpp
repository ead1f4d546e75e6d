#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hest/sim.hpp"

namespace hest {

/// Shortest round-trip decimal representation (locale-independent).
std::string format_double(double value);

/// Schedule file: header `t`, one measurement time per row.
void write_schedule_csv(const std::filesystem::path& path, const std::vector<Time>& times);
std::vector<Time> read_schedule_csv(const std::filesystem::path& path);

/// Matrix file: `rows,cols` metadata line, then row-major values.
void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& m);
MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// Trajectory file: t, available, y_1..y_p, then optional u_1..u_m and
/// optional x_true_1..x_true_n columns.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          bool include_truth);

/// Trajectory file contents as read back; inputs/true_states are empty when
/// the optional columns are absent.
struct RecordedTrajectory {
    std::vector<Time> times;
    std::vector<bool> available;
    std::vector<VectorXd> outputs;
    std::vector<VectorXd> inputs;
    std::vector<VectorXd> true_states;
};
RecordedTrajectory read_trajectory_csv(const std::filesystem::path& path);

/// Result file: t, x_true_1..n (when known), x_hat_1..n, err_norm (when
/// truth is known), solved.
struct EstimateRecord {
    std::vector<Time> times;
    std::vector<VectorXd> estimates;
    std::vector<VectorXd> true_states; // may be empty
    std::vector<double> error_norms;   // may be empty
    std::vector<bool> solved;
};
void write_result_csv(const std::filesystem::path& path, const EstimateRecord& record);

/// Sweep table: schedule, avg_gap, mean_rmse, std_rmse.
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

} // namespace hest
