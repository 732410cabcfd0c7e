#ifndef CURVEDSURF_H
#define CURVEDSURF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>

typedef enum {
  CS_STATUS_OK = 0,
  CS_STATUS_NULL_ARGUMENT = 1,
  CS_STATUS_INVALID_STRING = 2,
  CS_STATUS_IO = 3,
  CS_STATUS_PARSE = 4,
  CS_STATUS_INVALID_MESH = 5,
  CS_STATUS_GEOMETRY = 6,
  CS_STATUS_INVALID_ARGUMENT = 7,
  CS_STATUS_PANIC = 8,
} CsStatus;

/**
 * A higher-order triangle mesh with the point and cell data read with it.
 */
typedef struct CsMesh CsMesh;

typedef struct {
  size_t order;
  size_t num_vertices;
  size_t num_elements;
  /**
   * Lagrange nodes per element, `(order + 1)(order + 2) / 2`.
   */
  size_t nodes_per_element;
  size_t num_point_fields;
} CsMeshInfo;

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *cs_last_error_message(void);

/**
 * Read a `.msh` (MSH 4.1 ASCII) or `.vtu` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
CsStatus cs_mesh_read(const char *path, CsMesh **out);

/**
 * Icosahedral sphere mesh after `level` projected refinements, with
 * order-`order` nodes on the sphere.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
CsStatus cs_mesh_sphere(double radius, size_t level, size_t order, CsMesh **out);

/**
 * Write the mesh and its point and cell data as VTU; `binary` selects
 * appended base64 arrays instead of ascii.
 *
 * # Safety
 * `mesh` must come from this library and `path` be a NUL-terminated string.
 */
CsStatus cs_mesh_write_vtu(const CsMesh *mesh, const char *path, bool binary);

/**
 * # Safety
 * `mesh` must come from this library and `info` be a valid pointer.
 */
CsStatus cs_mesh_info(const CsMesh *mesh, CsMeshInfo *info);

/**
 * Copy the nodes of `element` as `x, y, z` triples into `out`, which holds
 * `len` doubles. Corners come first, then the edge nodes of the edges
 * (v0, v1), (v0, v2), (v1, v2), then interior nodes.
 *
 * # Safety
 * `mesh` must come from this library and `out` point to `len` doubles.
 */
CsStatus cs_mesh_element_nodes(const CsMesh *mesh, size_t element, double *out, size_t len);

/**
 * Surface area of the curved mesh by quadrature of degree `quad_degree`.
 *
 * # Safety
 * `mesh` must come from this library and `area` be a valid pointer.
 */
CsStatus cs_mesh_area(const CsMesh *mesh, size_t quad_degree, double *area);

/**
 * Release a mesh; null is ignored.
 *
 * # Safety
 * `mesh` must come from this library and not be used afterwards.
 */
void cs_mesh_free(CsMesh *mesh);

#endif  /* CURVEDSURF_H */
