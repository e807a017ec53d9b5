#include "defreg/fields.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "defreg/errors.hpp"
#include "defreg/text_format.hpp"

namespace defreg {

std::size_t DisplacementField::valid_count() const {
    return static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(),
                                                  [](std::uint8_t b) { return b != 0; }));
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

}  // namespace

void write_displacement_csv(std::ostream& out, const DisplacementField& f) {
    out << kDisplacementSchema << '\n' << "x,y,u,v,valid\n";
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            const std::size_t i = f.index(x, y);
            const bool ok = f.valid[i] != 0;
            out << x << ',' << y << ',' << format_double(ok ? f.u[i] : 0.0) << ','
                << format_double(ok ? f.v[i] : 0.0) << ',' << (ok ? 1 : 0) << '\n';
        }
    }
}

void write_strain_csv(std::ostream& out, const StrainField& f) {
    out << kStrainSchema << '\n' << "x,y,Exx,Eyy,Exy,valid\n";
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            const std::size_t i = f.index(x, y);
            const bool ok = f.valid[i] != 0;
            out << x << ',' << y << ',' << format_double(ok ? f.exx[i] : 0.0) << ','
                << format_double(ok ? f.eyy[i] : 0.0) << ',' << format_double(ok ? f.exy[i] : 0.0)
                << ',' << (ok ? 1 : 0) << '\n';
        }
    }
}

FieldTable read_field_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("field CSV: empty file");
    }
    FieldTable table;
    const std::string_view schema = trim(line);
    std::vector<std::string> expected_header;
    if (schema == kDisplacementSchema) {
        table.kind = "displacement";
        expected_header = {"x", "y", "u", "v", "valid"};
    } else if (schema == kStrainSchema) {
        table.kind = "strain";
        expected_header = {"x", "y", "Exx", "Eyy", "Exy", "valid"};
    } else {
        throw FormatError("field CSV: unrecognized schema line '" + std::string(schema) + "'");
    }
    if (!std::getline(in, line)) {
        throw FormatError("field CSV: missing header row");
    }
    const auto header = split_commas(line);
    if (header.size() != expected_header.size() ||
        !std::equal(header.begin(), header.end(), expected_header.begin())) {
        throw FormatError("field CSV: header row does not match the " + table.kind + " schema");
    }
    table.components.assign(expected_header.begin() + 2, expected_header.end() - 1);
    table.values.resize(table.components.size());

    const std::size_t ncols = expected_header.size();
    std::size_t row = 0;
    int max_x = -1;
    int max_y = -1;
    std::vector<std::pair<int, int>> coords;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        ++row;
        const auto cells = split_commas(line);
        if (cells.size() != ncols) {
            throw FormatError("field CSV: row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " columns, expected " +
                              std::to_string(ncols));
        }
        const int x = static_cast<int>(parse_long(cells[0], "x"));
        const int y = static_cast<int>(parse_long(cells[1], "y"));
        coords.emplace_back(x, y);
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
        for (std::size_t c = 0; c < table.components.size(); ++c) {
            table.values[c].push_back(parse_double(cells[2 + c], table.components[c]));
        }
        table.valid.push_back(parse_long(cells.back(), "valid") != 0 ? 1 : 0);
    }
    table.width = max_x + 1;
    table.height = max_y + 1;
    if (row == 0 || static_cast<std::size_t>(table.width) * table.height != row) {
        throw FormatError("field CSV: rows do not form a complete grid");
    }
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const auto [x, y] = coords[i];
        if (static_cast<std::size_t>(y) * table.width + x != i) {
            throw FormatError("field CSV: row " + std::to_string(i + 1) +
                              " is out of row-major order");
        }
    }
    return table;
}

DisplacementField read_displacement_csv(std::istream& in) {
    FieldTable t = read_field_csv(in);
    if (t.kind != "displacement") {
        throw FormatError("expected a displacement field CSV, got " + t.kind);
    }
    DisplacementField f(t.width, t.height);
    f.u = std::move(t.values[0]);
    f.v = std::move(t.values[1]);
    f.valid = std::move(t.valid);
    return f;
}

StrainField read_strain_csv(std::istream& in) {
    FieldTable t = read_field_csv(in);
    if (t.kind != "strain") {
        throw FormatError("expected a strain field CSV, got " + t.kind);
    }
    StrainField f(t.width, t.height);
    f.exx = std::move(t.values[0]);
    f.eyy = std::move(t.values[1]);
    f.exy = std::move(t.values[2]);
    f.valid = std::move(t.valid);
    return f;
}

}  // namespace defreg
