#include "orthoseg/labels.hpp"

#include <vector>

namespace orthoseg {

LabelMap connected_components(const Mask& mask, Connectivity conn) {
    if (mask.channels() != 1) throw error("connected_components: mask must be single-channel");
    const int h = mask.height(), w = mask.width();
    LabelMap out(h, w, 0);

    static const int off4[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
    static const int off8[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                   {0, 1},   {1, -1}, {1, 0},  {1, 1}};
    const int n_off = conn == Connectivity::four ? 4 : 8;
    const int(*off)[2] = conn == Connectivity::four ? off4 : off8;

    std::vector<int> stack;
    uint32_t next = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(0, y, x) || out.at(y, x) != 0) continue;
            ++next;
            out.at(y, x) = next;
            stack.push_back(y * w + x);
            while (!stack.empty()) {
                int p = stack.back();
                stack.pop_back();
                int py = p / w, px = p % w;
                for (int k = 0; k < n_off; ++k) {
                    int ny = py + off[k][0], nx = px + off[k][1];
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    if (!mask.at(0, ny, nx) || out.at(ny, nx) != 0) continue;
                    out.at(ny, nx) = next;
                    stack.push_back(ny * w + nx);
                }
            }
        }
    }
    return out;
}

LabelMap relabel_sequential(const LabelMap& labels) {
    LabelMap out(labels.height(), labels.width(), 0);
    std::vector<uint32_t> remap(labels.max_label() + 1, 0);
    uint32_t next = 0;
    for (size_t i = 0; i < labels.size(); ++i) {
        uint32_t v = labels.raw()[i];
        if (v == 0) continue;
        if (remap[v] == 0) remap[v] = ++next;
        out.raw()[i] = remap[v];
    }
    return out;
}

bool is_sequential(const LabelMap& labels) {
    std::vector<char> seen(labels.max_label() + 1, 0);
    for (uint32_t v : labels.raw()) seen[v] = 1;
    for (size_t id = 1; id < seen.size(); ++id)
        if (!seen[id]) return false;
    return true;
}

}  // namespace orthoseg
