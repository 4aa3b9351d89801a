#include "scilit/csv.hpp"

namespace scilit::csv {

std::vector<std::vector<std::string>> parse(std::string_view input) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    bool cell_started = false;
    size_t i = 0;

    auto end_cell = [&] {
        row.push_back(std::move(cell));
        cell.clear();
        cell_started = false;
    };
    auto end_row = [&] {
        end_cell();
        rows.push_back(std::move(row));
        row.clear();
    };

    while (i < input.size()) {
        const char c = input[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < input.size() && input[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell.push_back(c);
            }
        } else if (c == '"' && cell.empty() && !cell_started) {
            in_quotes = true;
            cell_started = true;
        } else if (c == ',') {
            end_cell();
        } else if (c == '\r' && i + 1 < input.size() && input[i + 1] == '\n') {
            end_row();
            ++i;
        } else if (c == '\n') {
            end_row();
        } else {
            cell.push_back(c);
            cell_started = true;
        }
        ++i;
    }
    if (cell_started || !cell.empty() || !row.empty()) end_row();
    return rows;
}

std::string escape_cell(std::string_view cell) {
    const bool needs_quotes = cell.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) return std::string(cell);
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace scilit::csv
