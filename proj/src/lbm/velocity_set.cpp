#include "latnet/lbm/velocity_set.hpp"

namespace latnet::lbm {

bool velocity_set_is_consistent() {
    using V = D2Q9;
    if (V::cx[0] != 0 || V::cy[0] != 0) return false;

    int sum_w = 0, sum_x = 0, sum_y = 0, sxx = 0, syy = 0, sxy = 0;
    for (int i = 0; i < V::Q; ++i) {
        const int wn = V::weight_num[i];
        sum_w += wn;
        sum_x += wn * V::cx[i];
        sum_y += wn * V::cy[i];
        sxx += wn * V::cx[i] * V::cx[i];
        syy += wn * V::cy[i] * V::cy[i];
        sxy += wn * V::cx[i] * V::cy[i];

        const int o = V::opposite[i];
        if (V::opposite[o] != i) return false;
        if (V::cx[o] != -V::cx[i] || V::cy[o] != -V::cy[i]) return false;
        if (V::w[i] != static_cast<double>(wn) / V::weight_den) return false;
    }
    // cs2 = 1/3 means sum w c_a c_a = den / 3 in numerator units.
    if (sum_w != V::weight_den || sum_x != 0 || sum_y != 0 || sxy != 0) return false;
    if (3 * sxx != V::weight_den || 3 * syy != V::weight_den) return false;
    return V::cs2 == 1.0 / 3.0;
}

}  // namespace latnet::lbm
