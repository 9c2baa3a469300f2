use crate::error::dim_err;
use crate::ndtape::Tensor;
use crate::Result;

/// Elementwise mean of member probability matrices. Each entry is summed in
/// sorted order, so the result does not depend on member order.
pub fn ensemble_mean(members: &[Tensor]) -> Result<Tensor> {
    let first = members.first().ok_or_else(|| dim_err!("ensemble needs at least one member"))?;
    if let Some(bad) = members.iter().find(|m| m.shape() != first.shape()) {
        return Err(dim_err!("member shape {:?} differs from {:?}", bad.shape(), first.shape()));
    }
    let k = members.len() as f64;
    let mut out = first.clone();
    let mut cell = Vec::with_capacity(members.len());
    for (idx, v) in out.data_mut().iter_mut().enumerate() {
        cell.clear();
        cell.extend(members.iter().map(|m| m.data()[idx]));
        cell.sort_by(f64::total_cmp);
        *v = cell.iter().sum::<f64>() / k;
    }
    Ok(out)
}

/// Argmax of the mean distribution per row; ties go to the lowest class.
pub fn ensemble_predict(members: &[Tensor]) -> Result<Vec<usize>> {
    Ok(ensemble_mean(members)?.argmax_rows())
}
