//! Deterministic synthetic BUS-like cohorts with planted density signal and
//! outcome risk, so every pipeline stage can be exercised end to end at
//! desk scale. Class is encoded in mean image intensity; realism is a
//! non-goal.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohort::{Cohort, Outcome, PatientRecord};
use crate::density::{Density, DensityDistribution};
use crate::imaging::GrayImage;
use crate::stats::derive_seed;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("bad config: {0}")]
    BadConfig(String),
}

/// True outcome model coefficients on the logit scale; age enters
/// standardized by the generating mean/SD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueLogOdds {
    pub intercept: f64,
    pub age: f64,
    pub density_a: f64,
    pub density_c: f64,
    pub density_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_women: usize,
    pub images_per_woman_mean: f64,
    pub images_per_woman_spread: f64,
    /// Population density mix, (A, B, C, D).
    pub density_prior: [f64; 4],
    /// Mean image intensity per class; monotone increasing plants the
    /// recoverable signal.
    pub class_intensity_means: [f64; 4],
    pub noise_sd: f64,
    pub true_log_odds: TrueLogOdds,
    pub dual_view_rate: f64,
    pub invalid_rate: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub seed: u64,
}

/// Age distribution of the generated population.
pub const AGE_MEAN: f64 = 53.4;
pub const AGE_SD: f64 = 11.9;
pub const AGE_RANGE: (f64, f64) = (25.0, 95.0);

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_women: 200,
            images_per_woman_mean: 4.0,
            images_per_woman_spread: 2.0,
            density_prior: [0.034, 0.390, 0.447, 0.129],
            class_intensity_means: [55.0, 100.0, 145.0, 190.0],
            noise_sd: 25.0,
            true_log_odds: TrueLogOdds {
                intercept: -1.6,
                age: 0.25,
                density_a: 0.0,
                density_c: 0.1,
                density_d: 1.5f64.ln(),
            },
            dual_view_rate: 0.04,
            invalid_rate: 0.03,
            image_width: 128,
            image_height: 96,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let sum: f64 = self.density_prior.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.density_prior.iter().any(|&p| p < 0.0) {
            return Err(SynthError::BadConfig(format!("density prior sums to {sum}")));
        }
        for (name, rate) in [("dual_view_rate", self.dual_view_rate), ("invalid_rate", self.invalid_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(SynthError::BadConfig(format!("{name} = {rate} outside [0,1]")));
            }
        }
        if self.dual_view_rate + self.invalid_rate > 1.0 {
            return Err(SynthError::BadConfig("invalid + dual view rates exceed 1".into()));
        }
        if self.image_width < 2 || self.image_height < 2 {
            return Err(SynthError::BadConfig("image dimensions too small".into()));
        }
        if self.noise_sd.is_nan() || self.noise_sd < 0.0 {
            return Err(SynthError::BadConfig(format!("noise_sd = {}", self.noise_sd)));
        }
        if self.images_per_woman_mean < 1.0 {
            return Err(SynthError::BadConfig("images_per_woman_mean below 1".into()));
        }
        Ok(())
    }

    /// Speckle-textured image for a density class: the class intensity mean
    /// plus Gaussian noise, clamped to [0, 255]. noise_sd = 0 gives a
    /// constant image at the class mean. Deterministic per (class, seed).
    pub fn generate_image(&self, class: Density, seed: u64) -> GrayImage {
        self.render(class, seed, self.image_width, self.image_height)
    }

    fn render(&self, class: Density, seed: u64, width: usize, height: usize) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mean = self.class_intensity_means[class.index()];
        let pixels: Vec<u8> = if self.noise_sd > 0.0 {
            let noise = Normal::new(0.0, self.noise_sd).expect("validated");
            (0..width * height)
                .map(|_| (mean + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
                .collect()
        } else {
            vec![mean.round().clamp(0.0, 255.0) as u8; width * height]
        };
        GrayImage::new(width, height, pixels, "", "").expect("valid dimensions")
    }

    /// Two same-class panels joined by a black separator band, sized so the
    /// halves survive the minimum-side check after splitting.
    fn render_dual_view(&self, class: Density, seed: u64) -> GrayImage {
        let panel_w = self.image_width.max(64);
        let h = self.image_height.max(64);
        let band = 8;
        let left = self.render(class, derive_seed(seed, 1), panel_w, h);
        let right = self.render(class, derive_seed(seed, 2), panel_w, h);
        let w = 2 * panel_w + band;
        let mut pixels = vec![0u8; w * h];
        for y in 0..h {
            pixels[y * w..y * w + panel_w].copy_from_slice(&left.pixels()[y * panel_w..(y + 1) * panel_w]);
            pixels[y * w + panel_w + band..(y + 1) * w]
                .copy_from_slice(&right.pixels()[y * panel_w..(y + 1) * panel_w]);
        }
        GrayImage::new(w, h, pixels, "", "").expect("valid dimensions")
    }

    /// One of three invalid variants, cycled by the seed: near-blank,
    /// undersized, or constant.
    fn render_invalid(&self, class: Density, seed: u64) -> GrayImage {
        match seed % 3 {
            0 => {
                let n = self.image_width * self.image_height;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let pixels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=3u8)).collect();
                GrayImage::new(self.image_width, self.image_height, pixels, "", "").unwrap()
            }
            1 => self.render(class, seed, 32, 32),
            _ => {
                let mean = self.class_intensity_means[class.index()].round().clamp(0.0, 255.0) as u8;
                GrayImage::new(self.image_width, self.image_height, vec![mean; self.image_width * self.image_height], "", "")
                    .unwrap()
            }
        }
    }
}

/// Latent values behind one generated woman; written to the truth CSV for
/// tests only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub patient_id: String,
    pub density: Density,
    pub age_years: i32,
    pub linear_predictor: f64,
    pub p_case: f64,
    pub outcome: bool,
    pub n_images: usize,
    pub n_invalid: usize,
    pub n_dual_view: usize,
}

#[derive(Debug)]
pub struct SynthCohort {
    pub cohort: Cohort,
    pub images: Vec<GrayImage>,
    pub truth: Vec<TruthRow>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sample_density(prior: &[f64; 4], rng: &mut ChaCha8Rng) -> Density {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, &pk) in prior.iter().enumerate() {
        acc += pk;
        if u < acc {
            return Density::from_index(k).unwrap();
        }
    }
    Density::D
}

/// Generate a full synthetic cohort: women drawn from the density prior,
/// truncated-normal ages, outcomes from the planted logistic model, and
/// per-woman image sets with the configured invalid and dual-view
/// fractions. Identical configs produce identical output.
pub fn generate_cohort(cfg: &SynthConfig) -> Result<SynthCohort, SynthError> {
    cfg.validate()?;

    let bus_anchor = NaiveDate::from_ymd_opt(2015, 6, 15).unwrap();
    let age_normal = Normal::new(AGE_MEAN, AGE_SD).expect("constants");
    let count_normal = Normal::new(cfg.images_per_woman_mean, cfg.images_per_woman_spread.max(0.0));

    let mut records = Vec::with_capacity(cfg.n_women);
    let mut truth = Vec::with_capacity(cfg.n_women);
    let mut images = Vec::new();

    for i in 0..cfg.n_women {
        let woman_seed = derive_seed(cfg.seed, i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(woman_seed);
        let patient_id = format!("w{i:05}");

        let density = sample_density(&cfg.density_prior, &mut rng);
        let age = loop {
            let a = age_normal.sample(&mut rng);
            if (AGE_RANGE.0..=AGE_RANGE.1).contains(&a) {
                break a;
            }
        };
        let age_years = age.floor() as i32;

        let bus_date = bus_anchor + chrono::Duration::days(rng.gen_range(-180..=180));
        let mammogram_date = bus_date - chrono::Duration::days(rng.gen_range(0..=30));
        let birth_year = chrono::Datelike::year(&bus_date) - age_years;

        let age_std_true = (age_years as f64 - AGE_MEAN) / AGE_SD;
        let lo = &cfg.true_log_odds;
        let mut eta = lo.intercept + lo.age * age_std_true;
        eta += match density {
            Density::A => lo.density_a,
            Density::B => 0.0,
            Density::C => lo.density_c,
            Density::D => lo.density_d,
        };
        let p_case = sigmoid(eta);
        let outcome = rng.gen::<f64>() < p_case;
        let diagnosis_date =
            outcome.then(|| bus_date + chrono::Duration::days(rng.gen_range(184..=1824)));

        let n_images = if cfg.images_per_woman_spread > 0.0 {
            count_normal
                .as_ref()
                .expect("validated spread")
                .sample(&mut rng)
                .round()
                .clamp(1.0, 64.0) as usize
        } else {
            cfg.images_per_woman_mean.round().max(1.0) as usize
        };

        let mut n_invalid = 0;
        let mut n_dual = 0;
        let mut image_ids = Vec::with_capacity(n_images);
        for k in 0..n_images {
            let image_seed = derive_seed(woman_seed, 1000 + k as u64);
            let roll: f64 = rng.gen();
            let mut img = if roll < cfg.invalid_rate {
                n_invalid += 1;
                cfg.render_invalid(density, image_seed)
            } else if roll < cfg.invalid_rate + cfg.dual_view_rate {
                n_dual += 1;
                cfg.render_dual_view(density, image_seed)
            } else {
                cfg.generate_image(density, image_seed)
            };
            img.image_id = format!("{patient_id}__{k:03}");
            img.patient_id = patient_id.clone();
            image_ids.push(img.image_id.clone());
            images.push(img);
        }

        let bus_birads = {
            let u: f64 = rng.gen();
            if u < 0.144 {
                1
            } else if u < 0.144 + 0.588 {
                2
            } else {
                3
            }
        };

        records.push(PatientRecord {
            patient_id: patient_id.clone(),
            birth_year,
            mammogram_date,
            bus_date,
            clinical_density: density,
            bus_birads,
            negative_screen: true,
            four_views: true,
            prior_cancer: false,
            diagnosis_date,
            outcome: Outcome::Undetermined,
            image_dir: None,
            image_ids,
        });
        truth.push(TruthRow {
            patient_id,
            density,
            age_years,
            linear_predictor: eta,
            p_case,
            outcome,
            n_images,
            n_invalid,
            n_dual_view: n_dual,
        });
    }

    Ok(SynthCohort {
        cohort: Cohort::from_records(records).expect("generated ids are unique"),
        images,
        truth,
    })
}

/// Convenience: the ideal per-image prediction for a class under a given
/// confusion level; used by tests that bypass image rendering.
pub fn noisy_one_hot(class: Density, confusion: f64) -> DensityDistribution {
    let off = confusion / 3.0;
    let mut p = [off; 4];
    p[class.index()] = 1.0 - confusion;
    DensityDistribution::new(p).expect("valid confusion level")
}
