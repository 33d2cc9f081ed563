#pragma once

#include <string>
#include <vector>

#include "sapinn/network.hpp"
#include "sapinn/problem.hpp"
#include "sapinn/reference.hpp"

namespace sapinn {

// 8-bit RGB canvas, row zero at the top. Written out as a PNG holding a
// stored-deflate zlib stream, so no codec dependency is involved.
struct Image {
    int w = 0, h = 0;
    std::vector<unsigned char> px;

    Image(int width, int height);
    void set(int x, int y, unsigned char r, unsigned char g, unsigned char b);
    void fill_rect(int x, int y, int rw, int rh, unsigned char r, unsigned char g,
                   unsigned char b);
};

void write_png(const std::string& path, const Image& img);

// Position t in [0,1] mapped through the viridis ramp.
void viridis(double t, unsigned char rgb[3]);

// 5x7 digit text (digits, '.', '-', '+', 'e', space); x,y is the top-left
// corner, scale enlarges pixels.
void draw_text(Image& img, int x, int y, const std::string& s, int scale, unsigned char r,
               unsigned char g, unsigned char b);

// The network evaluated on a grid's mesh, packaged as a grid so it can be
// plotted, diffed, and saved like any other field.
ReferenceGrid prediction_grid(const NetworkParams& net, const ReferenceGrid& mesh);

// The PDE residual of the network on a grid's mesh.
ReferenceGrid residual_grid(const NetworkParams& net, const Problem& p,
                            const ReferenceGrid& mesh);

// Every plot writes <png_path>.data.txt beside the image holding exactly the
// plotted numbers; images are derived artifacts, the sidecar is the record.
void plot_solution_heatmap(const std::string& png_path, const ReferenceGrid& g);
void plot_residual_map(const std::string& png_path, const NetworkParams& net, const Problem& p,
                       const ReferenceGrid& mesh);
void plot_abs_error_map(const std::string& png_path, const ReferenceGrid& pred,
                        const ReferenceGrid& ref);
void plot_snapshot_slices(const std::string& png_path, const NetworkParams& net,
                          const ReferenceGrid& ref, const std::vector<double>& times);
void plot_mask_scatter(const std::string& png_path, const std::string& mask_csv,
                       const Problem& p);

}  // namespace sapinn
