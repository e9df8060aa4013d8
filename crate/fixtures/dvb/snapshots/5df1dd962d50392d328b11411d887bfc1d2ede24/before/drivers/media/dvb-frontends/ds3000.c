/*
 * ds3000.c - DVB-S frontend driver (test fixture)
 */
#include <linux/kernel.h>
#include <linux/module.h>
#include <linux/string.h>
#include <linux/slab.h>
#include <media/dvb_frontend.h>

static int debug;

struct ds3000_state_priv {
	struct i2c_adapter *i2c;
	u8 diseqc_buf[8];
};

static int ds3000_read_status(struct dvb_frontend *fe, enum fe_status *status)
{
	struct ds3000_state *state = fe->demodulator_priv;
	int sync = ds3000_readreg(state, 0x24);

	*status = 0;
	if (sync & 0x08)
		*status |= FE_HAS_LOCK;
	return 0;
}

static int ds3000_send_diseqc_msg(struct dvb_frontend *fe,
				    struct dvb_diseqc_master_cmd *d)
{
	struct ds3000_state *state = fe->demodulator_priv;
	int i, ret = 0, status = 0;

	dprintk("%s(", __func__);
	ds3000_writereg(state, 0xa2, 0x00);

	memcpy(state->diseqc_buf, d->msg, d->msg_len);

	for (i = 0; i < d->msg_len; i++)
		ds3000_writereg(state, 0xa3 + i, state->diseqc_buf[i]);

	return 0;
}
