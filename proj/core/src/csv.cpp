#include "hest/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hest {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary); // fixed \n line endings everywhere
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return in;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, const std::filesystem::path& path) {
    const std::string s = strip(field);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw IoError("malformed numeric field '" + field + "' in " + path.string());
    }
    return value;
}

Time parse_time(const std::string& field, const std::filesystem::path& path) {
    const std::string s = strip(field);
    Time value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw IoError("malformed integer field '" + field + "' in " + path.string());
    }
    return value;
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

void write_schedule_csv(const std::filesystem::path& path, const std::vector<Time>& times) {
    auto out = open_out(path);
    out << "t\n";
    for (Time t : times) out << t << "\n";
}

std::vector<Time> read_schedule_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || strip(line) != "t") {
        throw IoError("schedule file must start with header 't': " + path.string());
    }
    std::vector<Time> times;
    while (std::getline(in, line)) {
        if (strip(line).empty()) continue;
        times.push_back(parse_time(line, path));
    }
    return times;
}

void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& m) {
    auto out = open_out(path);
    out << m.rows() << "," << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out << (j ? "," : "") << format_double(m(i, j));
        }
        out << "\n";
    }
}

MatrixXd read_matrix_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty matrix file: " + path.string());
    const auto dims = split_csv_line(line);
    if (dims.size() != 2) {
        throw IoError("matrix file must start with a 'rows,cols' line: " + path.string());
    }
    const Time rows = parse_time(dims[0], path);
    const Time cols = parse_time(dims[1], path);
    if (rows < 0 || cols < 0) throw IoError("negative matrix dimensions in " + path.string());
    MatrixXd m(rows, cols);
    for (Time i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw IoError("truncated matrix file: " + path.string());
        const auto fields = split_csv_line(line);
        if (static_cast<Time>(fields.size()) != cols) {
            throw IoError("matrix row " + std::to_string(i) + " has wrong arity in " +
                          path.string());
        }
        for (Time j = 0; j < cols; ++j) m(i, j) = parse_double(fields[static_cast<std::size_t>(j)], path);
    }
    return m;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          bool include_truth) {
    auto out = open_out(path);
    const Eigen::Index p = traj.outputs.empty() ? 0 : traj.outputs.front().size();
    const Eigen::Index m = traj.inputs.empty() ? 0 : traj.inputs.front().size();
    const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();

    out << "t,available";
    for (Eigen::Index i = 0; i < p; ++i) out << ",y_" << (i + 1);
    for (Eigen::Index i = 0; i < m; ++i) out << ",u_" << (i + 1);
    if (include_truth) {
        for (Eigen::Index i = 0; i < n; ++i) out << ",x_true_" << (i + 1);
    }
    out << "\n";

    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        out << traj.times[k] << "," << (traj.available[k] ? 1 : 0);
        for (Eigen::Index i = 0; i < p; ++i) out << "," << format_double(traj.outputs[k][i]);
        for (Eigen::Index i = 0; i < m; ++i) out << "," << format_double(traj.inputs[k][i]);
        if (include_truth) {
            for (Eigen::Index i = 0; i < n; ++i) out << "," << format_double(traj.states[k][i]);
        }
        out << "\n";
    }
}

RecordedTrajectory read_trajectory_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trajectory file: " + path.string());
    const auto header = split_csv_line(strip(line));
    if (header.size() < 2 || strip(header[0]) != "t" || strip(header[1]) != "available") {
        throw IoError("trajectory header must start with 't,available': " + path.string());
    }
    Eigen::Index p = 0, m = 0, n = 0;
    for (std::size_t k = 2; k < header.size(); ++k) {
        const std::string name = strip(header[k]);
        if (name.rfind("y_", 0) == 0) ++p;
        else if (name.rfind("u_", 0) == 0) ++m;
        else if (name.rfind("x_true_", 0) == 0) ++n;
        else throw IoError("unknown trajectory column '" + name + "' in " + path.string());
    }
    if (p == 0) throw IoError("trajectory file lacks output columns: " + path.string());

    RecordedTrajectory rec;
    while (std::getline(in, line)) {
        if (strip(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw IoError("trajectory row has wrong arity in " + path.string());
        }
        rec.times.push_back(parse_time(fields[0], path));
        rec.available.push_back(parse_time(fields[1], path) != 0);
        std::size_t col = 2;
        VectorXd y(p);
        for (Eigen::Index i = 0; i < p; ++i) y[i] = parse_double(fields[col++], path);
        rec.outputs.push_back(std::move(y));
        VectorXd u(m);
        for (Eigen::Index i = 0; i < m; ++i) u[i] = parse_double(fields[col++], path);
        if (m > 0) rec.inputs.push_back(std::move(u));
        VectorXd x(n);
        for (Eigen::Index i = 0; i < n; ++i) x[i] = parse_double(fields[col++], path);
        if (n > 0) rec.true_states.push_back(std::move(x));
    }
    for (std::size_t k = 1; k < rec.times.size(); ++k) {
        if (rec.times[k] != rec.times[k - 1] + 1) {
            throw IoError("trajectory times must be consecutive from 0 in " + path.string());
        }
    }
    if (!rec.times.empty() && rec.times.front() != 0) {
        throw IoError("trajectory must start at t=0 in " + path.string());
    }
    return rec;
}

void write_result_csv(const std::filesystem::path& path, const EstimateRecord& record) {
    auto out = open_out(path);
    const bool with_truth = !record.true_states.empty();
    const Eigen::Index n = record.estimates.empty() ? 0 : record.estimates.front().size();

    out << "t";
    if (with_truth) {
        for (Eigen::Index i = 0; i < n; ++i) out << ",x_true_" << (i + 1);
    }
    for (Eigen::Index i = 0; i < n; ++i) out << ",x_hat_" << (i + 1);
    if (with_truth) out << ",err_norm";
    out << ",solved\n";

    for (std::size_t k = 0; k < record.times.size(); ++k) {
        out << record.times[k];
        if (with_truth) {
            for (Eigen::Index i = 0; i < n; ++i) {
                out << "," << format_double(record.true_states[k][i]);
            }
        }
        for (Eigen::Index i = 0; i < n; ++i) out << "," << format_double(record.estimates[k][i]);
        if (with_truth) out << "," << format_double(record.error_norms[k]);
        out << "," << (record.solved[k] ? 1 : 0) << "\n";
    }
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    auto out = open_out(path);
    out << "schedule,avg_gap,mean_rmse,std_rmse\n";
    for (const SweepRow& row : rows) {
        out << row.label << "," << format_double(row.average_gap) << ","
            << format_double(row.mean_rmse) << "," << format_double(row.stddev_rmse) << "\n";
    }
}

} // namespace hest
