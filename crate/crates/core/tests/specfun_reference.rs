#![allow(clippy::excessive_precision)]

//! Spherical Bessel values against 40-digit reference values computed
//! independently from the half-integer cylinder functions.

use dce_core::specfun::{sph_bessel_j, sph_bessel_y};

const REFERENCE: &[(u32, f64, f64, f64)] = &[
    (0, 0.1, 9.9833416646828152288e-1, -9.9500416527802571031),
    (0, 0.7, 9.2031098176813008654e-1, -1.092631696120697862),
    (0, 1.0, 8.4147098480789650665e-1, -5.403023058681397174e-1),
    (0, 3.3, -4.7801725497954004573e-2, 2.9923629391177726216e-1),
    (0, 9.5, -7.9106442591378218193e-3, 1.0496549012593457609e-1),
    (0, 20.0, 4.5647262536381382719e-2, -2.0404103090669599303e-2),
    (0, 49.0, -1.9464339852234118742e-2, -6.1345417090538180344e-3),
    (0, 50.5, 4.6014606268412778993e-3, -1.9259931979692914531e-2),
    (0, 120.0, 4.8384265351026190774e-3, -6.7848414210546813992e-3),
    (0, 777.7, -1.2702647301143011001e-3, -1.9954799362756138278e-4),
    (0, 1000.0, 8.2687954053200256026e-4, -5.6237907629070299108e-4),
    (1, 0.1, 3.3300011902557571571e-2, -1.0049875069427084703e+2),
    (1, 0.7, 2.2209827783377377362e-1, -2.4812134047976985598),
    (1, 1.0, 3.0116867893975678925e-1, -1.3817732906760362241),
    (1, 3.3, 2.8475092254876089635e-1, 1.3847939031970469496e-1),
    (1, 9.5, 1.0413279073023585801e-1, 1.895964321976251404e-2),
    (1, 20.0, -1.8121739963850530167e-2, -4.6667467690914862684e-2),
    (1, 49.0, -6.5317731346096163761e-3, 1.9339145123477918374e-2),
    (1, 50.5, -1.9168813947478235761e-2, -4.9828454185183653158e-3),
    (1, 120.0, -6.7445211999288262402e-3, -4.8949668802780747557e-3),
    (1, 777.7, -2.011813544737929644e-4, 1.2700081427494720383e-3),
    (1, 1000.0, -5.6155219675017098852e-4, -8.2744191960829326325e-4),
    (2, 0.1, 6.6619060844556877977e-4, -3.0050124791753449864e+3),
    (2, 0.7, 3.153878037661471795e-2, -9.5411400387265823547),
    (2, 1.0, 6.2035052011373861102e-2, -3.6050175661599689548),
    (2, 3.3, 3.066662005422821061e-1, -1.7334593907568207815e-1),
    (2, 9.5, 4.0794683437107040138e-2, -9.8978234372325361134e-2),
    (2, 20.0, -4.8365523530958962244e-2, 1.3403982937032369901e-2),
    (2, 49.0, 1.9064435374604958556e-2, 7.3185710023279763022e-3),
    (2, 50.5, -5.7402020494637473505e-3, 1.8963921360771031443e-2),
    (2, 120.0, -5.0070395651008397334e-3, 6.6624672490477295303e-3),
    (2, 777.7, 1.2694886672836191162e-3, 2.0444708637315533404e-4),
    (2, 1000.0, -8.2856419712225307322e-4, 5.5989675053187811129e-4),
    (5, 0.1, 9.6163102329164487127e-10, -9.4552518756252575282e+8),
    (5, 0.7, 1.5866115512568321475e-5, -8.2549167247215065448e+3),
    (5, 1.0, 9.2561158611258163567e-5, -9.9944034339223640949e+2),
    (5, 3.3, 2.445672543311824069e-2, -1.4466700151628893323),
    (5, 9.5, -1.3688737180120973703e-2, 1.1522266562550415612e-1),
    (5, 20.0, 1.6683908063095692767e-2, -4.8172347757372781177e-2),
    (5, 49.0, -1.1756322853454915777e-2, 1.6760278861948320869e-2),
    (5, 50.5, -1.7117974654484442062e-2, -1.0070693015495399926e-2),
    (5, 120.0, -6.1317720453380944971e-3, -5.6496247336401522981e-3),
    (5, 777.7, -2.2401262983628972043e-4, 1.2661955753365001952e-3),
    (5, 1000.0, -5.4991718119978627823e-4, -8.3522816890732781679e-4),
    (10, 0.1, 7.2715109967136755864e-21, -6.5490139746562768335e+19),
    (10, 0.7, 2.0326908136586244326e-12, -3.3541892120105015813e+10),
    (10, 1.0, 7.116552640047313024e-11, -6.722150082562084436e+8),
    (10, 3.3, 8.7709547664655252192e-6, -1.734134052584432267e+3),
    (10, 9.5, 5.0380573755839666472e-2, -2.1648581986859389673e-1),
    (10, 20.0, 3.968669864462637131e-2, -3.6843410496289961749e-2),
    (10, 49.0, 2.859648851057254728e-3, 2.0449696958778635204e-2),
    (10, 50.5, -1.9431024639740760907e-2, 4.8258024192244862753e-3),
    (10, 120.0, -7.3562157321801159356e-3, 3.9493385202224542737e-3),
    (10, 777.7, 1.2530455733974824152e-3, 2.8882356417236980427e-4),
    (10, 1000.0, -8.5656826028064375453e-4, 5.1608702748197175358e-4),
    (20, 0.1, 7.625092312409079525e-46, -3.1987199351621121626e+44),
    (20, 0.7, 6.0503656756989033693e-29, -5.7622277729214913623e+26),
    (20, 1.0, 7.537795722236872994e-26, -3.2395922185789839244e+23),
    (20, 3.3, 1.575522931979395293e-15, -4.7532784996711399334e+12),
    (20, 9.5, 9.325949628600889367e-7, -3.1084344712822211184e+3),
    (20, 20.0, 3.8324851639805178782e-2, -9.3401132250914409778e-2),
    (20, 49.0, 1.2089530749452334029e-3, 2.1378000748994631895e-2),
    (20, 50.5, -2.0014150592606909407e-2, 5.3324339784583755352e-3),
    (20, 120.0, 5.8314540040745241474e-3, 6.0393633602914873164e-3),
    (20, 777.7, -1.1711993085112055508e-3, -5.3128000320523597902e-4),
    (20, 1000.0, 9.2604722584078879359e-4, -3.7768585010601112344e-4),
    (35, 0.1, 4.1743548647265386926e-87, -3.3740693887315794637e+85),
    (35, 0.7, 1.5761330787253402823e-57, -1.2768363570645516642e+55),
    (35, 1.0, 4.1461424648889714217e-52, -3.3983643643394426585e+49),
    (35, 3.3, 5.4472975595598179493e-34, -7.8692383415296418569e+30),
    (35, 9.5, 3.7172725544631591462e-18, -4.1394704381230359995e+14),
    (35, 20.0, 8.2907373105455080854e-8, -1.0285422823011431887e+4),
    (35, 49.0, 2.3452901336118318883e-2, -7.3020594473465491764e-3),
    (35, 50.5, 1.7167634114790591274e-2, 1.5999958685641034626e-2),
    (35, 120.0, 7.9350546510188691108e-3, -3.1196546685119048048e-3),
    (35, 777.7, 1.0583377509410278063e-3, -7.3146292902561800954e-4),
    (35, 1000.0, -3.2810147177919065739e-5, 9.9977701977440728317e-4),
    (50, 0.1, 3.6326917273532343606e-131, -2.7255297893660272677e+129),
    (50, 0.7, 6.518063301941427726e-89, -2.1702199672202360449e+86),
    (50, 1.0, 3.6152747174897873114e-81, -2.7391922846297571576e+78),
    (50, 3.3, 2.9038653172231214778e-55, -1.0354230444737394372e+52),
    (50, 9.5, 1.800362033219550561e-32, -5.8941663483295671558e+28),
    (50, 20.0, 5.6500807918725270296e-17, -9.5425416670026216722e+12),
    (50, 49.0, 1.4004787065891006682e-2, -5.2989404533130956598e-2),
    (50, 50.5, 2.1341511498577166553e-2, -3.6969779280010280288e-2),
    (50, 120.0, 8.0092482844906588902e-3, 3.5218246232915266894e-3),
    (50, 777.7, -2.8724181511480969084e-4, 1.2547432211694944261e-3),
    (50, 1000.0, -7.7931955636399760722e-4, -6.2764517903872429264e-4),
];

#[test]
fn first_and_second_kind_match_reference() {
    for &(l, x, j, y) in REFERENCE {
        let got_j = sph_bessel_j(l, x).unwrap();
        let got_y = sph_bessel_y(l, x).unwrap();
        let rel_j = (got_j - j).abs() / j.abs();
        let rel_y = (got_y - y).abs() / y.abs();
        assert!(rel_j <= 1e-12, "j_{l}({x}) = {got_j}, want {j} (rel {rel_j:e})");
        assert!(rel_y <= 1e-12, "n_{l}({x}) = {got_y}, want {y} (rel {rel_y:e})");
    }
}
