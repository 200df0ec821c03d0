// PNG/JPEG decode and PNG encode, backed by libpng and libjpeg.
// The container format is sniffed from magic bytes; alpha channels are
// composited over white so decoded images always carry 1 or 3 channels.

#pragma once

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "salientcrop/errors.hpp"
#include "salientcrop/image.hpp"

namespace salientcrop {

namespace detail {

struct JpegErrorJump {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit_throwless(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorJump*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

inline RasterImage decode_jpeg(const unsigned char* bytes, std::size_t size) {
  jpeg_decompress_struct cinfo;
  JpegErrorJump err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit_throwless;
  err.message[0] = '\0';
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError(std::string("jpeg: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, const_cast<unsigned char*>(bytes), size);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  RasterImage img;
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.channels = cinfo.output_components == 1 ? 1 : 3;
  img.data.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);

  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * cinfo.output_components);
  unsigned char* rowp = row.data();
  while (cinfo.output_scanline < cinfo.output_height) {
    const int y = static_cast<int>(cinfo.output_scanline);
    jpeg_read_scanlines(&cinfo, &rowp, 1);
    float* dst = &img.data[static_cast<std::size_t>(y) * img.width * img.channels];
    for (std::size_t i = 0; i < row.size(); ++i) dst[i] = row[i] / 255.0f;
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

inline RasterImage decode_png(const unsigned char* bytes, std::size_t size) {
  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&pi, bytes, size))
    throw DecodeError(std::string("png: ") + pi.message);

  const bool color = (pi.format & PNG_FORMAT_FLAG_COLOR) != 0;
  pi.format = color ? PNG_FORMAT_RGBA : PNG_FORMAT_GA;
  const int in_ch = color ? 4 : 2;

  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = pi.message;
    png_image_free(&pi);
    throw DecodeError("png: " + msg);
  }

  RasterImage img;
  img.width = static_cast<int>(pi.width);
  img.height = static_cast<int>(pi.height);
  img.channels = color ? 3 : 1;
  img.data.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
  const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t p = 0; p < pixels; ++p) {
    const unsigned char* src = &buf[p * in_ch];
    const float a = src[in_ch - 1] / 255.0f;
    for (int c = 0; c < img.channels; ++c)
      img.data[p * img.channels + c] = (src[c] / 255.0f) * a + (1.0f - a);
  }
  return img;
}

inline unsigned char to_byte(float v) {
  const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  return static_cast<unsigned char>(c * 255.0f + 0.5f);
}

}  // namespace detail

inline RasterImage decode_image(const unsigned char* bytes, std::size_t size) {
  if (size >= 8 && std::memcmp(bytes, "\x89PNG\r\n\x1a\n", 8) == 0)
    return detail::decode_png(bytes, size);
  if (size >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8)
    return detail::decode_jpeg(bytes, size);
  throw DecodeError("unsupported image format (expected PNG or JPEG)");
}

inline RasterImage decode_image(const std::vector<unsigned char>& bytes) {
  return decode_image(bytes.data(), bytes.size());
}

inline std::vector<unsigned char> encode_png(const RasterImage& img) {
  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

  std::vector<unsigned char> pixels(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) pixels[i] = detail::to_byte(img.data[i]);

  png_alloc_size_t out_size = 0;
  if (!png_image_write_to_memory(&pi, nullptr, &out_size, 0, pixels.data(), 0, nullptr))
    throw IoError(std::string("png encode: ") + pi.message);
  std::vector<unsigned char> out(out_size);
  if (!png_image_write_to_memory(&pi, out.data(), &out_size, 0, pixels.data(), 0, nullptr))
    throw IoError(std::string("png encode: ") + pi.message);
  out.resize(out_size);
  return out;
}

inline std::vector<unsigned char> encode_png(const GrayImage& img) {
  RasterImage r;
  r.width = img.width;
  r.height = img.height;
  r.channels = 1;
  r.data = img.data;
  return encode_png(r);
}

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const unsigned char* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("write failed: " + path);
}

inline void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
  write_file(path, bytes.data(), bytes.size());
}

}  // namespace salientcrop
