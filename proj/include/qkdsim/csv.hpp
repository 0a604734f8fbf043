#ifndef QKDSIM_CSV_HPP
#define QKDSIM_CSV_HPP

#include <fstream>
#include <string>
#include <vector>

namespace qkdsim {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

// RFC-4180 quoting; '\n' line endings.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);

    void row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
};

} // namespace qkdsim

#endif
