/*
 * dvb_ca_en50221.c - decoy for the omission scan (test fixture)
 */
#include <linux/string.h>

static int dvb_ca_en50221_write_data(struct dvb_ca_private *ca, int slot,
				     u8 *buf, int bytes_write)
{
	u8 tmp[64];

	if (bytes_write > (int)sizeof(tmp))
		return -EINVAL;
	memcpy(tmp, buf, bytes_write);
	return ca_write(ca, slot, tmp, bytes_write);
}
