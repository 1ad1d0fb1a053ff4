#pragma once

#include <array>

namespace latnet::lbm {

/// D2Q9 lattice. Direction order:
///   0:(0,0) 1:(1,0) 2:(0,1) 3:(-1,0) 4:(0,-1) 5:(1,1) 6:(-1,1) 7:(-1,-1) 8:(1,-1)
/// Weights are 4/9 (rest), 1/9 (axis), 1/36 (diagonal); cs^2 = 1/3.
struct D2Q9 {
    static constexpr int Q = 9;

    static constexpr std::array<int, Q> cx{0, 1, 0, -1, 0, 1, -1, -1, 1};
    static constexpr std::array<int, Q> cy{0, 0, 1, 0, -1, 1, 1, -1, -1};
    static constexpr std::array<int, Q> opposite{0, 3, 4, 1, 2, 7, 8, 5, 6};

    /// Weights as exact rationals w_i = num_i / den.
    static constexpr std::array<int, Q> weight_num{16, 4, 4, 4, 4, 1, 1, 1, 1};
    static constexpr int weight_den = 36;

    static constexpr std::array<double, Q> w{
        4.0 / 9.0,  1.0 / 9.0,  1.0 / 9.0,  1.0 / 9.0, 1.0 / 9.0,
        1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0};

    static constexpr double cs2 = 1.0 / 3.0;
};

/// Checks the moment identities of the velocity set in exact integer
/// arithmetic: sum w = 1, sum w c = 0, sum w c_a c_b = cs2 delta_ab,
/// opposite is an involution mapping c to -c, and c_0 = 0.
bool velocity_set_is_consistent();

}  // namespace latnet::lbm
