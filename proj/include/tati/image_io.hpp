#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "tati/core.hpp"
#include "tati/errors.hpp"

namespace tati {

// PNG/JPEG ingestion and PNG emission. Everything funnels through OpenCV's
// codecs; pixel data is converted to/from our RGB8 layout at the boundary.
// PNG writes pin the encoder settings so repeated runs emit identical bytes.

inline ImageDoc image_from_mat(const cv::Mat& bgr, std::string source_path = {}) {
    if (bgr.empty()) throw MissingImage("decoded image is empty");
    cv::Mat m = bgr;
    if (m.channels() == 4) {
        cv::Mat tmp(m.rows, m.cols, CV_8UC3);
        for (int y = 0; y < m.rows; ++y)
            for (int x = 0; x < m.cols; ++x) {
                const auto& px = m.at<cv::Vec4b>(y, x);
                tmp.at<cv::Vec3b>(y, x) = {px[0], px[1], px[2]};  // drop alpha
            }
        m = tmp;
    } else if (m.channels() == 1) {
        cv::Mat tmp(m.rows, m.cols, CV_8UC3);
        for (int y = 0; y < m.rows; ++y)
            for (int x = 0; x < m.cols; ++x) {
                const std::uint8_t g = m.at<std::uint8_t>(y, x);
                tmp.at<cv::Vec3b>(y, x) = {g, g, g};
            }
        m = tmp;
    }
    ImageDoc img;
    img.width = m.cols;
    img.height = m.rows;
    img.source_path = std::move(source_path);
    img.pixels.resize(static_cast<std::size_t>(m.cols) * m.rows * 3);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            const auto& px = m.at<cv::Vec3b>(y, x);
            std::uint8_t* out = img.at(x, y);
            out[0] = px[2];  // BGR -> RGB
            out[1] = px[1];
            out[2] = px[0];
        }
    return img;
}

inline cv::Mat mat_from_image(const ImageDoc& img) {
    cv::Mat m(img.height, img.width, CV_8UC3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const std::uint8_t* px = img.at(x, y);
            m.at<cv::Vec3b>(y, x) = {px[2], px[1], px[0]};  // RGB -> BGR
        }
    return m;
}

inline ImageDoc decode_image(const std::vector<std::uint8_t>& bytes,
                             std::string source_path = {}) {
    const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
                      const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat decoded = cv::imdecode(raw, cv::IMREAD_UNCHANGED);
    return image_from_mat(decoded, std::move(source_path));
}

inline ImageDoc load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingImage("cannot open image: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_image(bytes, path);
}

inline std::vector<std::uint8_t> encode_png(const ImageDoc& img) {
    std::vector<std::uint8_t> out;
    const std::vector<int> params = {cv::IMWRITE_PNG_COMPRESSION, 6,
                                     cv::IMWRITE_PNG_STRATEGY,
                                     cv::IMWRITE_PNG_STRATEGY_DEFAULT};
    if (!cv::imencode(".png", mat_from_image(img), out, params))
        throw Error("PNG encode failed");
    return out;
}

inline void save_png(const ImageDoc& img, const std::string& path) {
    const auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

inline std::string image_to_b64(const ImageDoc& img) {
    return base64_encode(encode_png(img));
}

inline ImageDoc image_from_b64(const std::string& b64) {
    return decode_image(base64_decode(b64));
}

}  // namespace tati
