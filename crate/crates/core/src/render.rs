//! Escape-time rendering over a window: per pixel, the number of iterations
//! until the orbit leaves the widened escape slab, clamped to the budget.

use rayon::prelude::*;

use crate::classify::escape_radius;
use crate::dimension::GridSpec;
use crate::map::CosineMap;

/// One byte per pixel, row-major with the top row at maximal imaginary part.
/// A pixel holds min(exit iteration, budget, 255); pixels that never exit
/// hold the clamped budget. Budget 0 renders uniformly zero.
pub fn escape_time_grid(map: &CosineMap, grid: &GridSpec, budget: u32) -> Vec<u8> {
    let rp2 = escape_radius(map) + 2.0;
    let rows: Vec<Vec<u8>> = (0..grid.ny)
        .into_par_iter()
        .map(|row| {
            let j = grid.ny - 1 - row; // top row = max Im
            (0..grid.nx)
                .map(|i| {
                    let mut z = grid.point(i, j);
                    let mut count = 0u32;
                    while count < budget {
                        if z.re.abs() >= rp2 {
                            break;
                        }
                        match map.eval(z) {
                            Ok(next) if next.re.is_finite() && next.im.is_finite() => {
                                z = next;
                                count += 1;
                            }
                            _ => {
                                count += 1;
                                break;
                            }
                        }
                    }
                    if budget == 0 {
                        0
                    } else {
                        count.min(budget).min(255) as u8
                    }
                })
                .collect()
        })
        .collect();
    rows.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::Window;
    use num_complex::Complex64;

    #[test]
    fn zero_budget_is_uniform() {
        let map = CosineMap::new(Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)).unwrap();
        let grid = GridSpec {
            window: Window {
                re_min: -10.0,
                re_max: 10.0,
                im_min: -10.0,
                im_max: 10.0,
            },
            nx: 32,
            ny: 16,
        };
        let px = escape_time_grid(&map, &grid, 0);
        assert_eq!(px.len(), 32 * 16);
        assert!(px.iter().all(|&v| v == 0));
    }

    #[test]
    fn far_right_exits_faster_than_center() {
        let map = CosineMap::new(Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)).unwrap();
        let grid = GridSpec {
            window: Window {
                re_min: -12.0,
                re_max: 12.0,
                im_min: -1.0,
                im_max: 1.0,
            },
            nx: 25,
            ny: 3,
        };
        let px = escape_time_grid(&map, &grid, 20);
        // middle row, far right pixel is already outside the slab
        let right = px[grid.nx + (grid.nx - 1)];
        let center = px[grid.nx + grid.nx / 2];
        assert!(right < center, "right {right} vs center {center}");
    }
}
