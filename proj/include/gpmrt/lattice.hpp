#ifndef GPMRT_LATTICE_HPP
#define GPMRT_LATTICE_HPP

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpmrt/smallmat.hpp"

namespace gpmrt {

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Discrete velocity set with fixed canonical ordering.
//   D1Q3:  0, +1, -1
//   D2Q9:  rest, E, N, W, S, NE, NW, SW, SE
// c = a*lambda is the particle speed; cs2 the model sound-speed squared
// (c^2/3 on D2Q9, (1-w0)c^2 on D1Q3).
struct Lattice {
    int d = 0;
    int q = 0;
    std::vector<std::array<int, 2>> e;  // e[i][1] == 0 when d == 1
    std::vector<double> w;
    double lambda = 0.0;
    double a = 0.0;
    double c = 0.0;
    double cs2 = 0.0;
    double w0 = 0.0;  // rest weight (D1Q3 parameter; 4/9 on D2Q9)
};

Lattice build_d1q3(double lambda, double a, double w0);
Lattice build_d2q9(double lambda, double a);

enum class TransformFlavor { Orthogonal, Natural };

// Moment transform; first n_conserved rows map the conserved quantities.
// The inverse is computed once at construction (LU with partial pivoting).
struct TransformMatrix {
    Mat m;
    Mat minv;
    double det = 0.0;
    int n_conserved = 1;
    TransformFlavor flavor = TransformFlavor::Orthogonal;
};

TransformMatrix orthogonal_transform_d1q3(double c, int n_conserved = 1);
TransformMatrix orthogonal_transform_d2q9(double c, int n_conserved = 1);

enum class RelaxationStructure { Diagonal, BlockLowerTriangular };

struct RelaxationMatrix {
    Mat s;
    RelaxationStructure structure = RelaxationStructure::Diagonal;
    // inclusive [begin, end) index ranges of the diagonal blocks
    std::vector<std::pair<int, int>> blocks;
};

// Classifies S against the block-lower-triangular layout and checks the
// diagonal-block eigenvalues of non-conserved rows lie in (0,2).
// Conserved-row diagonal entries may additionally be 0 or 1.
RelaxationMatrix validate_relaxation(const Mat& s, int n_conserved);

}  // namespace gpmrt

#endif
