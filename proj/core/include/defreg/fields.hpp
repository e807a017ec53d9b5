#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace defreg {

// Dense per-pixel (u, v) on the undeformed grid, in pixels.
struct DisplacementField {
    int width = 0;
    int height = 0;
    std::vector<double> u;
    std::vector<double> v;
    std::vector<std::uint8_t> valid;

    DisplacementField() = default;
    DisplacementField(int w, int h)
        : width(w),
          height(h),
          u(static_cast<std::size_t>(w) * h, 0.0),
          v(static_cast<std::size_t>(w) * h, 0.0),
          valid(static_cast<std::size_t>(w) * h, 1) {}

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x);
    }
    std::size_t size() const { return u.size(); }
    std::size_t valid_count() const;
};

// Green-Lagrange components; Exy stored once.
struct StrainField {
    int width = 0;
    int height = 0;
    std::vector<double> exx;
    std::vector<double> eyy;
    std::vector<double> exy;
    std::vector<std::uint8_t> valid;

    StrainField() = default;
    StrainField(int w, int h)
        : width(w),
          height(h),
          exx(static_cast<std::size_t>(w) * h, 0.0),
          eyy(static_cast<std::size_t>(w) * h, 0.0),
          exy(static_cast<std::size_t>(w) * h, 0.0),
          valid(static_cast<std::size_t>(w) * h, 1) {}

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x);
    }
    std::size_t size() const { return exx.size(); }
};

// Field CSV files begin with a one-line schema comment, then a header row:
//   # defreg-field displacement v1 units=px
//   x,y,u,v,valid
// or
//   # defreg-field strain v1 units=1
//   x,y,Exx,Eyy,Exy,valid
// Rows are in row-major pixel order; invalid rows carry 0 values.
inline constexpr const char* kDisplacementSchema = "# defreg-field displacement v1 units=px";
inline constexpr const char* kStrainSchema = "# defreg-field strain v1 units=1";

void write_displacement_csv(std::ostream& out, const DisplacementField& field);
void write_strain_csv(std::ostream& out, const StrainField& field);

// Generic reader: returns the schema kind ("displacement" or "strain") and
// the component columns, named as in the header.
struct FieldTable {
    std::string kind;
    int width = 0;
    int height = 0;
    std::vector<std::string> components;
    std::vector<std::vector<double>> values;  // one vector per component
    std::vector<std::uint8_t> valid;
};
FieldTable read_field_csv(std::istream& in);

DisplacementField read_displacement_csv(std::istream& in);
StrainField read_strain_csv(std::istream& in);

}  // namespace defreg
